#include "repsim/tensorio.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "repsim/error.hpp"

namespace repsim {

namespace {

constexpr char kMagic[8] = {'R', 'E', 'P', 'S', 'T', 'O', 'R', '1'};
constexpr std::uint16_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "store I/O assumes a little-endian host");

void put_u16(std::string& out, std::uint16_t v) {
    out.append(reinterpret_cast<const char*>(&v), 2);
}
void put_u32(std::string& out, std::uint32_t v) {
    out.append(reinterpret_cast<const char*>(&v), 4);
}

class Reader {
  public:
    Reader(const char* data, std::size_t size) : data_(data), size_(size) {}

    void need(std::size_t n, const char* what) const {
        if (pos_ + n > size_) {
            throw TruncatedFileError(std::string("truncated store file: expected ") + what);
        }
    }
    std::uint16_t u16(const char* what) {
        need(2, what);
        std::uint16_t v;
        std::memcpy(&v, data_ + pos_, 2);
        pos_ += 2;
        return v;
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v;
        std::memcpy(&v, data_ + pos_, 4);
        pos_ += 4;
        return v;
    }
    std::string bytes(std::size_t n, const char* what) {
        need(n, what);
        std::string s(data_ + pos_, n);
        pos_ += n;
        return s;
    }
    void floats(float* dst, std::size_t count, const char* what) {
        need(count * 4, what);
        std::memcpy(dst, data_ + pos_, count * 4);
        pos_ += count * 4;
    }
    bool at_end() const { return pos_ == size_; }

  private:
    const char* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

}  // namespace

void ActivationStore::add_record(ActivationRecord rec) {
    if (rec.block.size() != static_cast<std::size_t>(rec.tokens) * dim_) {
        throw FormatError("record block size mismatch for sample '" + rec.sample_id +
                          "' layer " + std::to_string(rec.layer) + ": got " +
                          std::to_string(rec.block.size()) + " values, expected " +
                          std::to_string(static_cast<std::size_t>(rec.tokens) * dim_));
    }
    if (rec.tokens < 1) {
        throw FormatError("record for sample '" + rec.sample_id + "' has zero tokens");
    }
    auto key = std::make_pair(rec.sample_id, rec.layer);
    if (index_.count(key)) {
        throw DuplicateKeyError("duplicate record key (sample '" + rec.sample_id +
                                "', layer " + std::to_string(rec.layer) + ")");
    }
    index_.emplace(std::move(key), records_.size());
    records_.push_back(std::move(rec));
}

bool ActivationStore::has(const std::string& sample_id, std::uint16_t layer) const {
    return index_.count({sample_id, layer}) > 0;
}

const ActivationRecord& ActivationStore::record(const std::string& sample_id,
                                                std::uint16_t layer) const {
    auto it = index_.find({sample_id, layer});
    if (it == index_.end()) {
        throw InvalidInputError("no record for sample '" + sample_id + "' at layer " +
                                std::to_string(layer));
    }
    return records_[it->second];
}

std::vector<std::string> ActivationStore::sample_ids() const {
    std::vector<std::string> ids;
    std::set<std::string> seen;
    for (const auto& rec : records_) {
        if (seen.insert(rec.sample_id).second) ids.push_back(rec.sample_id);
    }
    return ids;
}

bool ActivationStore::operator==(const ActivationStore& other) const {
    if (model_ != other.model_ || n_layers_ != other.n_layers_ || dim_ != other.dim_ ||
        records_.size() != other.records_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& a = records_[i];
        const auto& b = other.records_[i];
        if (a.sample_id != b.sample_id || a.layer != b.layer || a.tokens != b.tokens ||
            std::memcmp(a.block.data(), b.block.data(), a.block.size() * 4) != 0) {
            return false;
        }
    }
    return true;
}

ActivationStore load_store(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open store file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string content = buf.str();

    Reader r(content.data(), content.size());
    const std::string magic = r.bytes(8, "magic");
    if (std::memcmp(magic.data(), kMagic, 8) != 0) {
        throw FormatError("bad magic in " + path.string() + ": not an activation store");
    }
    const std::uint16_t version = r.u16("version");
    if (version != kVersion) {
        throw FormatError("unsupported store version " + std::to_string(version));
    }
    const std::uint32_t record_count = r.u32("record count");
    const std::uint16_t reserved = r.u16("reserved");
    if (reserved != 0) throw FormatError("nonzero reserved header bytes");

    // An empty store is just the 16-byte header.
    if (record_count == 0 && r.at_end()) return ActivationStore{};

    const std::uint32_t meta_len = r.u32("metadata length");
    const std::string meta_str = r.bytes(meta_len, "metadata");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_str);
        if (!meta.at("model").is_string() || !meta.at("n_layers").is_number_integer() ||
            !meta.at("dim").is_number_integer()) {
            throw FormatError("metadata field type mismatch");
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad store metadata JSON: " + std::string(e.what()));
    }

    ActivationStore store(meta["model"].get<std::string>(),
                          meta["n_layers"].get<std::uint32_t>(),
                          meta["dim"].get<std::uint32_t>());
    for (std::uint32_t i = 0; i < record_count; ++i) {
        ActivationRecord rec;
        const std::uint32_t id_len = r.u32("sample id length");
        rec.sample_id = r.bytes(id_len, "sample id");
        rec.layer = r.u16("layer");
        rec.tokens = r.u32("token count");
        rec.block.resize(static_cast<std::size_t>(rec.tokens) * store.dim());
        r.floats(rec.block.data(), rec.block.size(), "activation payload");
        store.add_record(std::move(rec));
    }
    if (!r.at_end()) throw FormatError("trailing bytes after last record in " + path.string());
    return store;
}

void write_store(const ActivationStore& store, const std::filesystem::path& path) {
    std::string out;
    out.append(kMagic, 8);
    put_u16(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(store.records().size()));
    put_u16(out, 0);  // reserved

    if (!store.records().empty()) {
        nlohmann::json meta;
        meta["model"] = store.model();
        meta["n_layers"] = store.n_layers();
        meta["dim"] = store.dim();
        const std::string meta_str = meta.dump();
        put_u32(out, static_cast<std::uint32_t>(meta_str.size()));
        out += meta_str;

        for (const auto& rec : store.records()) {
            put_u32(out, static_cast<std::uint32_t>(rec.sample_id.size()));
            out += rec.sample_id;
            put_u16(out, rec.layer);
            put_u32(out, rec.tokens);
            out.append(reinterpret_cast<const char*>(rec.block.data()), rec.block.size() * 4);
        }
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed: " + path.string());
}

PairManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
        PairManifest m;
        m.left_source = j.at("left_source").get<std::string>();
        m.right_source = j.at("right_source").get<std::string>();
        for (const auto& p : j.at("pairs")) {
            if (!p.is_array() || p.size() != 2) {
                throw FormatError("manifest pair is not a 2-element array");
            }
            m.pairs.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad manifest JSON in " + path.string() + ": " + e.what());
    }
}

void write_manifest(const PairManifest& manifest, const std::filesystem::path& path) {
    nlohmann::json j;
    j["left_source"] = manifest.left_source;
    j["right_source"] = manifest.right_source;
    auto pairs = nlohmann::json::array();
    for (const auto& [l, r] : manifest.pairs) pairs.push_back({l, r});
    j["pairs"] = std::move(pairs);
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f << j.dump(2) << "\n";
    if (!f) throw IoError("write failed: " + path.string());
}

void validate_manifest(const PairManifest& manifest, const ActivationStore& left,
                       const ActivationStore& right) {
    auto known = [](const ActivationStore& s) {
        std::set<std::string> ids;
        for (const auto& rec : s.records()) ids.insert(rec.sample_id);
        return ids;
    };
    const auto left_ids = known(left);
    const auto right_ids = known(right);
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& pr : manifest.pairs) {
        if (!left_ids.count(pr.first)) {
            throw DanglingIdError("manifest references unknown left id '" + pr.first + "'");
        }
        if (!right_ids.count(pr.second)) {
            throw DanglingIdError("manifest references unknown right id '" + pr.second + "'");
        }
        if (!seen.insert(pr).second) {
            throw DuplicateKeyError("duplicate manifest pair ('" + pr.first + "', '" +
                                    pr.second + "')");
        }
    }
}

}  // namespace repsim
