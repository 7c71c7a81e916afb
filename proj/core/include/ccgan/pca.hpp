#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "ccgan/text_encode.hpp"

namespace ccgan {

struct PcaResult {
  Eigen::MatrixXd coordinates;        // pooled rows x out_dims
  Eigen::MatrixXd components;         // d x out_dims, unit columns
  std::vector<double> explained_variance;        // eigenvalue per component
  std::vector<double> explained_variance_ratio;  // eigenvalue / total variance
  std::vector<std::string> domain_tags;          // per pooled row
  bool degenerate_rank = false;  // some requested components were zero-filled
};

/// Principal components of the pooled, mean-centered rows via power iteration
/// with deflation (tolerance 1e-9, at most 1000 iterations per component).
/// Sign convention: each component's first nonzero loading is positive.
PcaResult pca_project(const std::vector<EncodedDataset>& datasets, int out_dims = 2);

/// Dump format: header "x y domain", one tab-separated row per sample.
void save_pca_dump(const std::string& path, const PcaResult& pca);

}  // namespace ccgan
