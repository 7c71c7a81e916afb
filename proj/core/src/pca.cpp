#include "ccgan/pca.hpp"

#include "ccgan/format.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "ccgan/errors.hpp"
#include "ccgan/rng.hpp"

namespace ccgan {

namespace {

// Dominant eigenpair of a symmetric PSD matrix by power iteration. Returns
// false when the iterate collapses (matrix numerically zero in the remaining
// subspace).
bool power_iteration(const Eigen::MatrixXd& m, Rng& rng, Eigen::VectorXd* vec,
                     double* value) {
  constexpr int kMaxIters = 1000;
  constexpr double kTol = 1e-9;
  const Eigen::Index d = m.rows();
  Eigen::VectorXd v(d);
  for (Eigen::Index j = 0; j < d; ++j) v(j) = rng.gaussian();
  double norm = v.norm();
  if (norm == 0.0) return false;
  v /= norm;
  for (int it = 0; it < kMaxIters; ++it) {
    Eigen::VectorXd next = m * v;
    norm = next.norm();
    if (norm < 1e-300) return false;
    next /= norm;
    // Eigenvectors are defined up to sign; compare against both orientations.
    const double delta = std::min((next - v).norm(), (next + v).norm());
    v = next;
    if (delta < kTol) break;
  }
  *vec = v;
  *value = v.dot(m * v);
  return *value > 0.0;
}

void apply_sign_convention(Eigen::VectorXd* v) {
  for (Eigen::Index j = 0; j < v->size(); ++j) {
    if ((*v)(j) != 0.0) {
      if ((*v)(j) < 0.0) *v = -*v;
      return;
    }
  }
}

}  // namespace

PcaResult pca_project(const std::vector<EncodedDataset>& datasets, int out_dims) {
  if (out_dims < 1) throw ConfigError("pca needs at least one output dimension");
  Eigen::Index total_rows = 0;
  Eigen::Index d = -1;
  for (const auto& ds : datasets) {
    ds.validate();
    if (d < 0) d = ds.dim();
    if (ds.dim() != d) throw DimensionError("pca inputs must share one dimension");
    total_rows += ds.rows();
  }
  if (total_rows < out_dims) {
    throw DataError("pca needs at least out_dims pooled rows");
  }
  if (out_dims > d) throw DimensionError("pca out_dims exceeds the input dimension");

  PcaResult result;
  Eigen::MatrixXd pooled(total_rows, d);
  result.domain_tags.reserve(static_cast<std::size_t>(total_rows));
  Eigen::Index row = 0;
  for (const auto& ds : datasets) {
    pooled.middleRows(row, ds.rows()) = ds.z;
    for (Eigen::Index i = 0; i < ds.rows(); ++i) {
      result.domain_tags.push_back(
          ds.domain_tags.empty() ? std::string() : ds.domain_tags[static_cast<std::size_t>(i)]);
    }
    row += ds.rows();
  }

  const Eigen::RowVectorXd mean = pooled.colwise().mean();
  pooled.rowwise() -= mean;
  Eigen::MatrixXd cov = (pooled.transpose() * pooled) / static_cast<double>(total_rows - 1);
  const double total_variance = cov.trace();

  result.components = Eigen::MatrixXd::Zero(d, out_dims);
  result.explained_variance.assign(static_cast<std::size_t>(out_dims), 0.0);
  result.explained_variance_ratio.assign(static_cast<std::size_t>(out_dims), 0.0);

  Rng rng(0x9CA00001UL);  // fixed seed: projections are deterministic
  for (int k = 0; k < out_dims; ++k) {
    Eigen::VectorXd vec;
    double value = 0.0;
    if (!power_iteration(cov, rng, &vec, &value)) {
      result.degenerate_rank = true;  // remaining components stay zero-filled
      break;
    }
    apply_sign_convention(&vec);
    result.components.col(k) = vec;
    result.explained_variance[static_cast<std::size_t>(k)] = value;
    if (total_variance > 0.0) {
      result.explained_variance_ratio[static_cast<std::size_t>(k)] = value / total_variance;
    }
    cov -= value * vec * vec.transpose();  // deflate
  }

  result.coordinates = pooled * result.components;
  return result;
}

void save_pca_dump(const std::string& path, const PcaResult& pca) {
  if (pca.coordinates.cols() < 2) {
    throw ContractError("the pca dump format needs at least two components");
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open pca dump for writing: " + path);
  out << "x\ty\tdomain\n";
  for (Eigen::Index i = 0; i < pca.coordinates.rows(); ++i) {
    out << format_double(pca.coordinates(i, 0)) << '\t' << format_double(pca.coordinates(i, 1))
        << '\t' << pca.domain_tags[static_cast<std::size_t>(i)] << '\n';
  }
  if (!out) throw DataError("failed writing pca dump: " + path);
}

}  // namespace ccgan
