#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ccgan/nn.hpp"

namespace ccgan {

/// One raw record. label < 0 means unlabeled; empty domain_tag means untagged.
struct Document {
  std::string text;
  int label = -1;
  std::string domain_tag;
};

/// Unigram+bigram term table with document frequencies.
struct Vocabulary {
  std::map<std::string, int> term_to_index;  // dense indices in [0, size)
  std::vector<long> doc_freq;                // per index
  long corpus_size = 0;

  int size() const { return static_cast<int>(term_to_index.size()); }
};

struct TfidfModel {
  Vocabulary vocab;
  std::vector<double> idf;  // per index, ln((1+N)/(1+df)) + 1
};

/// Rows in the continuous representation space. labels/domain_tags are either
/// empty (none recorded) or one entry per row; label -1 / tag "" mean absent.
struct EncodedDataset {
  Eigen::MatrixXd z;
  std::vector<int> labels;
  std::vector<std::string> domain_tags;

  Eigen::Index rows() const { return z.rows(); }
  Eigen::Index dim() const { return z.cols(); }
  bool has_labels() const { return !labels.empty(); }
  void validate() const;
};

/// Lowercases and splits on any run of non-alphanumeric bytes.
std::vector<std::string> tokenize(const std::string& text);

/// Top max_features unigrams+bigrams by total frequency, ties broken
/// lexicographically; document frequencies counted per distinct term per doc.
Vocabulary build_vocab(const std::vector<Document>& corpus, int max_features = 5000);

TfidfModel fit_tfidf(const Vocabulary& vocab);

/// tf = raw in-document count; rows L2-normalized unless all-zero.
EncodedDataset tfidf_encode(const TfidfModel& model, const std::vector<Document>& docs);

struct AutoencoderConfig {
  int latent_dim = 256;
  int hidden_dim = 512;
  int epochs = 10;
  int batch_size = 64;
  double base_lr = 1e-5;
  int lr_decay_every = 200;
  std::uint64_t seed = 0;
};

struct AutoencoderResult {
  MlpParams encoder;
  std::vector<double> epoch_losses;  // mean reconstruction error per epoch
};

/// Trains a dense reconstruction autoencoder on pooled unlabeled rows and
/// returns the encoder (decoder discarded). Deterministic per seed.
AutoencoderResult pretrain_autoencoder(const EncodedDataset& all_data,
                                       const AutoencoderConfig& config);

/// Applies a trained encoder to a dataset, carrying labels and tags through.
EncodedDataset encode_with(const MlpParams& encoder, const EncodedDataset& data);

/// Corpus file: one record per line, tab-separated "label<TAB>domain<TAB>text"
/// with "-" for an absent label or domain. UTF-8.
std::vector<Document> load_corpus(const std::string& path);
void save_corpus(const std::string& path, const std::vector<Document>& docs);

/// Embedding file: header "n=<rows> d=<dim>", then one space-separated decimal
/// row per line, optionally prefixed "label=<k>" and/or "domain=<s>".
EncodedDataset load_external_embeddings(const std::string& path);
void save_embeddings(const std::string& path, const EncodedDataset& data);

}  // namespace ccgan
