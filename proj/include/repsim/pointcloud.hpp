#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <string>
#include <vector>

namespace repsim {

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// N x D matrix of sample representations, rows are samples.
// All metric computation runs in double regardless of storage precision.
class PointCloud {
  public:
    // Auto-generates ids "s0", "s1", ... when none are given.
    explicit PointCloud(MatrixRM data);
    PointCloud(MatrixRM data, std::vector<std::string> sample_ids);

    std::size_t n_samples() const { return static_cast<std::size_t>(data_.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(data_.cols()); }
    const MatrixRM& data() const { return data_; }
    const std::vector<std::string>& sample_ids() const { return sample_ids_; }

    // Rows picked by index, ids carried along.
    PointCloud subset(const std::vector<std::size_t>& rows) const;

  private:
    void validate() const;

    MatrixRM data_;
    std::vector<std::string> sample_ids_;
};

}  // namespace repsim
