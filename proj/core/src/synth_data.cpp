#include "ccgan/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "ccgan/errors.hpp"
#include "ccgan/rng.hpp"

namespace ccgan {

void SyntheticDomainSpec::validate() const {
  if (sigma <= 0.0) throw SpecError("synthetic domain sigma must be positive");
  if (class_means.size() < 2) throw SpecError("synthetic domain needs at least 2 classes");
  const Eigen::Index d = class_means.front().size();
  if (d < 2) throw SpecError("synthetic domain dimension must be at least 2");
  for (const auto& m : class_means) {
    if (m.size() != d) throw DimensionError("class means must share one dimension");
  }
  if (offset.size() != d) throw DimensionError("domain offset dimension mismatch");
  if (samples_per_class.size() != class_means.size()) {
    throw DimensionError("samples_per_class must list one count per class");
  }
  long total = 0;
  for (int n : samples_per_class) {
    if (n < 0) throw SpecError("samples_per_class entries must be nonnegative");
    total += n;
  }
  if (total == 0) throw DataError("synthetic domain would contain no samples");
}

EncodedDataset generate_domain(const SyntheticDomainSpec& spec,
                               const std::string& domain_tag) {
  spec.validate();
  const Eigen::Index d = spec.class_means.front().size();
  long total = 0;
  for (int n : spec.samples_per_class) total += n;

  Rng rng(spec.seed);
  EncodedDataset out;
  out.z.resize(total, d);
  out.labels.reserve(static_cast<std::size_t>(total));
  out.domain_tags.assign(static_cast<std::size_t>(total), domain_tag);

  Eigen::Index row = 0;
  for (std::size_t c = 0; c < spec.class_means.size(); ++c) {
    const Eigen::VectorXd center = spec.class_means[c] + spec.offset;
    for (int i = 0; i < spec.samples_per_class[c]; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        out.z(row, j) = center(j) + spec.sigma * rng.gaussian();
      }
      out.labels.push_back(static_cast<int>(c));
      ++row;
    }
  }
  return out;
}

namespace {

Eigen::VectorXd random_unit_vector(Rng& rng, int d) {
  Eigen::VectorXd v(d);
  double norm = 0.0;
  do {
    for (int j = 0; j < d; ++j) v(j) = rng.gaussian();
    norm = v.norm();
  } while (norm < 1e-12);
  return v / norm;
}

// Class means with all pairwise distances equal to `distance`. Two classes sit
// on a random axis through the origin; more classes use a centered regular
// simplex on the leading coordinate axes.
std::vector<Eigen::VectorXd> place_class_means(int num_classes, int d, double distance,
                                               std::uint64_t seed) {
  std::vector<Eigen::VectorXd> means;
  means.reserve(static_cast<std::size_t>(num_classes));
  if (num_classes == 2) {
    Rng rng(seed);
    const Eigen::VectorXd u = random_unit_vector(rng, d);
    means.push_back(-0.5 * distance * u);
    means.push_back(0.5 * distance * u);
    return means;
  }
  if (num_classes > d) {
    throw SpecError("equidistant class means need dimension >= class count");
  }
  const double scale = distance / std::sqrt(2.0);
  Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
  for (int c = 0; c < num_classes; ++c) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(d);
    m(c) = scale;
    centroid += m;
    means.push_back(std::move(m));
  }
  centroid /= static_cast<double>(num_classes);
  for (auto& m : means) m -= centroid;
  return means;
}

}  // namespace

MultiSourceTask make_multisource_task(int k, const std::vector<double>& shift_magnitudes,
                                      int d, double sigma, int n_per_class,
                                      std::uint64_t seed, int num_classes,
                                      double class_mean_distance) {
  if (k < 1) throw SpecError("a task needs at least one source domain");
  if (static_cast<int>(shift_magnitudes.size()) != k) {
    throw SpecError("expected one shift magnitude per source");
  }
  for (double m : shift_magnitudes) {
    if (m < 0.0) throw SpecError("shift magnitudes must be nonnegative");
  }
  if (n_per_class <= 0) throw SpecError("n_per_class must be positive");
  if (num_classes < 2) throw SpecError("a task needs at least two classes");
  if (class_mean_distance < 0.0) throw SpecError("class-mean distance must be nonnegative");

  MultiSourceTask task;
  task.sigma = sigma;
  task.class_means =
      place_class_means(num_classes, d, class_mean_distance, derive_seed(seed, 0x3EA75));

  SyntheticDomainSpec base;
  base.class_means = task.class_means;
  base.sigma = sigma;
  base.samples_per_class.assign(static_cast<std::size_t>(num_classes), n_per_class);

  Rng dir_rng(derive_seed(seed, 0xD17EC7));
  for (int i = 0; i < k; ++i) {
    const Eigen::VectorXd direction = random_unit_vector(dir_rng, d);
    SyntheticDomainSpec src = base;
    src.offset = shift_magnitudes[static_cast<std::size_t>(i)] * direction;
    src.seed = derive_seed(seed, 0x500 + static_cast<std::uint64_t>(i));
    task.sources.push_back(generate_domain(src, "source" + std::to_string(i)));
    task.source_distances.push_back(src.offset.norm());
  }

  SyntheticDomainSpec tgt = base;
  tgt.offset = Eigen::VectorXd::Zero(d);
  tgt.seed = derive_seed(seed, 0x7A67E7);
  EncodedDataset target = generate_domain(tgt, "target");
  task.target_eval_labels = std::move(target.labels);
  target.labels.clear();
  task.target = std::move(target);
  return task;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double bayes_accuracy(const MultiSourceTask& task) {
  if (task.class_means.empty() || task.sigma <= 0.0) {
    throw ContractError("bayes_accuracy needs the task's generating parameters");
  }
  const int c = static_cast<int>(task.class_means.size());
  if (c == 2) {
    const double delta = (task.class_means[1] - task.class_means[0]).norm();
    return normal_cdf(delta / (2.0 * task.sigma));
  }
  // Monte-Carlo estimate of the nearest-mean rule under equal priors.
  constexpr long kSamples = 1000000;
  Rng rng(0xBA7E5ACCUL);
  const Eigen::Index d = task.class_means.front().size();
  long correct = 0;
  Eigen::VectorXd x(d);
  for (long s = 0; s < kSamples; ++s) {
    const int truth = static_cast<int>(rng.below(static_cast<std::uint64_t>(c)));
    for (Eigen::Index j = 0; j < d; ++j) {
      x(j) = task.class_means[static_cast<std::size_t>(truth)](j) + task.sigma * rng.gaussian();
    }
    int best = 0;
    double best_dist = (x - task.class_means[0]).squaredNorm();
    for (int j = 1; j < c; ++j) {
      const double dist = (x - task.class_means[static_cast<std::size_t>(j)]).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        best = j;
      }
    }
    if (best == truth) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(kSamples);
}

void save_task(const std::string& dir, const MultiSourceTask& task) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  nlohmann::json manifest;
  manifest["sigma"] = task.sigma;
  manifest["source_distances"] = task.source_distances;
  nlohmann::json means = nlohmann::json::array();
  for (const auto& m : task.class_means) {
    means.push_back(std::vector<double>(m.data(), m.data() + m.size()));
  }
  manifest["class_means"] = std::move(means);

  nlohmann::json source_files = nlohmann::json::array();
  for (std::size_t i = 0; i < task.sources.size(); ++i) {
    const std::string name = "source" + std::to_string(i) + ".emb";
    save_embeddings((fs::path(dir) / name).string(), task.sources[i]);
    source_files.push_back(name);
  }
  manifest["sources"] = std::move(source_files);

  save_embeddings((fs::path(dir) / "target.emb").string(), task.target);
  manifest["target"] = "target.emb";

  if (!task.target_eval_labels.empty()) {
    std::ofstream labels((fs::path(dir) / "target_labels.txt").string(), std::ios::trunc);
    if (!labels) throw DataError("cannot write target labels in " + dir);
    for (int y : task.target_eval_labels) labels << y << '\n';
    manifest["target_labels"] = "target_labels.txt";
  }

  std::ofstream out((fs::path(dir) / "task.json").string(), std::ios::trunc);
  if (!out) throw DataError("cannot write task manifest in " + dir);
  out << manifest.dump(2) << '\n';
  if (!out) throw DataError("failed writing task manifest in " + dir);
}

MultiSourceTask load_task(const std::string& dir) {
  namespace fs = std::filesystem;
  const std::string manifest_path = (fs::path(dir) / "task.json").string();
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open task manifest: " + manifest_path);
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed task manifest " + manifest_path + ": " + e.what());
  }

  MultiSourceTask task;
  try {
    task.sigma = manifest.at("sigma").get<double>();
    for (const auto& m : manifest.at("class_means")) {
      const auto values = m.get<std::vector<double>>();
      task.class_means.push_back(
          Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
    }
    if (manifest.contains("source_distances")) {
      task.source_distances = manifest.at("source_distances").get<std::vector<double>>();
    }
    for (const auto& name : manifest.at("sources")) {
      task.sources.push_back(
          load_external_embeddings((fs::path(dir) / name.get<std::string>()).string()));
    }
    task.target = load_external_embeddings(
        (fs::path(dir) / manifest.at("target").get<std::string>()).string());
    if (manifest.contains("target_labels")) {
      const std::string labels_path =
          (fs::path(dir) / manifest.at("target_labels").get<std::string>()).string();
      std::ifstream labels(labels_path);
      if (!labels) throw DataError("cannot open target labels: " + labels_path);
      int y = 0;
      while (labels >> y) task.target_eval_labels.push_back(y);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("task manifest " + manifest_path + " is missing fields: " + e.what());
  }

  // Hygiene: even if the target file carried labels, they are evaluation-only.
  if (task.target.has_labels()) {
    if (task.target_eval_labels.empty()) {
      task.target_eval_labels = task.target.labels;
    }
    task.target.labels.clear();
  }
  return task;
}

}  // namespace ccgan
