#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace repsim {

// One (sample, layer) activation block: T tokens x dim values.
// Payload stays float32, exactly as stored on disk.
struct ActivationRecord {
    std::string sample_id;
    std::uint16_t layer = 0;
    std::uint32_t tokens = 0;
    std::vector<float> block;  // tokens * dim, token-major
};

// Ragged on-disk tensor store. Records are addressable by
// (sample_id, layer); token counts may differ per sample.
class ActivationStore {
  public:
    ActivationStore() = default;
    ActivationStore(std::string model, std::uint32_t n_layers, std::uint32_t dim)
        : model_(std::move(model)), n_layers_(n_layers), dim_(dim) {}

    const std::string& model() const { return model_; }
    std::uint32_t n_layers() const { return n_layers_; }
    std::uint32_t dim() const { return dim_; }

    // Throws DuplicateKeyError on a repeated (sample_id, layer) key and
    // FormatError if the block size is not tokens * dim.
    void add_record(ActivationRecord rec);

    bool has(const std::string& sample_id, std::uint16_t layer) const;
    const ActivationRecord& record(const std::string& sample_id, std::uint16_t layer) const;

    // File order, which write_store preserves.
    const std::vector<ActivationRecord>& records() const { return records_; }

    // Distinct sample ids in first-appearance order.
    std::vector<std::string> sample_ids() const;

    bool operator==(const ActivationStore& other) const;

  private:
    std::string model_;
    std::uint32_t n_layers_ = 0;
    std::uint32_t dim_ = 0;
    std::vector<ActivationRecord> records_;
    std::map<std::pair<std::string, std::uint16_t>, std::size_t> index_;
};

// Pairing of sample ids across two stores (e.g. a sentence and its
// translation). Pairing is explicit, never by file order.
struct PairManifest {
    std::string left_source;
    std::string right_source;
    std::vector<std::pair<std::string, std::string>> pairs;
};

ActivationStore load_store(const std::filesystem::path& path);
void write_store(const ActivationStore& store, const std::filesystem::path& path);

PairManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const PairManifest& manifest, const std::filesystem::path& path);

// Returns normally iff every referenced id exists in its store and no
// pair repeats. Throws DanglingIdError / DuplicateKeyError otherwise.
void validate_manifest(const PairManifest& manifest, const ActivationStore& left,
                       const ActivationStore& right);

}  // namespace repsim
