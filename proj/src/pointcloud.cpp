#include "repsim/pointcloud.hpp"

#include <cmath>
#include <unordered_set>
#include <utility>

#include "repsim/error.hpp"

namespace repsim {

PointCloud::PointCloud(MatrixRM data) : data_(std::move(data)) {
    sample_ids_.reserve(n_samples());
    for (std::size_t i = 0; i < n_samples(); ++i) {
        sample_ids_.push_back("s" + std::to_string(i));
    }
    validate();
}

PointCloud::PointCloud(MatrixRM data, std::vector<std::string> sample_ids)
    : data_(std::move(data)), sample_ids_(std::move(sample_ids)) {
    validate();
}

void PointCloud::validate() const {
    if (n_samples() < 3) {
        throw InvalidInputError("PointCloud needs at least 3 samples, got " +
                                std::to_string(n_samples()));
    }
    if (dim() < 1) {
        throw InvalidInputError("PointCloud needs at least 1 dimension");
    }
    if (sample_ids_.size() != n_samples()) {
        throw InvalidInputError("sample_ids size does not match n_samples");
    }
    if (!data_.allFinite()) {
        throw InvalidInputError("PointCloud contains non-finite values");
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : sample_ids_) {
        if (!seen.insert(id).second) {
            throw InvalidInputError("duplicate sample id: " + id);
        }
    }
}

PointCloud PointCloud::subset(const std::vector<std::size_t>& rows) const {
    MatrixRM m(static_cast<Eigen::Index>(rows.size()), data_.cols());
    std::vector<std::string> ids;
    ids.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        m.row(static_cast<Eigen::Index>(r)) = data_.row(static_cast<Eigen::Index>(rows[r]));
        ids.push_back(sample_ids_[rows[r]]);
    }
    return PointCloud(std::move(m), std::move(ids));
}

}  // namespace repsim
