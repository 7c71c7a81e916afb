#include "ccgan/text_encode.hpp"

#include "ccgan/format.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "ccgan/autodiff.hpp"
#include "ccgan/errors.hpp"
#include "ccgan/rng.hpp"

namespace ccgan {

void EncodedDataset::validate() const {
  if (!z.allFinite()) throw DataError("dataset contains non-finite values");
  if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != z.rows()) {
    throw DimensionError("label count does not match row count");
  }
  if (!domain_tags.empty() && static_cast<Eigen::Index>(domain_tags.size()) != z.rows()) {
    throw DimensionError("domain tag count does not match row count");
  }
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    const bool alnum = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
    if (alnum) {
      current.push_back(static_cast<char>((c >= 'A' && c <= 'Z') ? c - 'A' + 'a' : c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

namespace {

// Unigram and space-joined bigram counts for one document.
std::map<std::string, long> term_counts(const std::string& text) {
  const std::vector<std::string> toks = tokenize(text);
  std::map<std::string, long> counts;
  for (const auto& t : toks) ++counts[t];
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
    ++counts[toks[i] + " " + toks[i + 1]];
  }
  return counts;
}

}  // namespace

Vocabulary build_vocab(const std::vector<Document>& corpus, int max_features) {
  if (corpus.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  if (max_features <= 0) throw ConfigError("max_features must be positive");

  std::map<std::string, long> total_freq;
  std::map<std::string, long> doc_freq;
  for (const auto& doc : corpus) {
    const auto counts = term_counts(doc.text);
    for (const auto& [term, count] : counts) {
      total_freq[term] += count;
      ++doc_freq[term];
    }
  }

  // Retention order: total frequency descending, then lexicographic.
  std::vector<std::pair<std::string, long>> ranked(total_freq.begin(), total_freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(ranked.size()) > max_features) ranked.resize(max_features);

  // Dense indices follow lexicographic order over the retained set, so the
  // vocabulary is independent of corpus row order.
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  Vocabulary vocab;
  vocab.corpus_size = static_cast<long>(corpus.size());
  vocab.doc_freq.reserve(ranked.size());
  for (const auto& [term, count] : ranked) {
    const int idx = static_cast<int>(vocab.doc_freq.size());
    vocab.term_to_index.emplace(term, idx);
    vocab.doc_freq.push_back(doc_freq.at(term));
  }
  return vocab;
}

TfidfModel fit_tfidf(const Vocabulary& vocab) {
  TfidfModel model;
  model.vocab = vocab;
  model.idf.reserve(vocab.doc_freq.size());
  const double n = static_cast<double>(vocab.corpus_size);
  for (long df : vocab.doc_freq) {
    model.idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(df))) + 1.0);
  }
  return model;
}

EncodedDataset tfidf_encode(const TfidfModel& model, const std::vector<Document>& docs) {
  const int dim = model.vocab.size();
  EncodedDataset out;
  out.z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(docs.size()), dim);

  bool any_label = false;
  bool any_tag = false;
  for (const auto& doc : docs) {
    any_label = any_label || doc.label >= 0;
    any_tag = any_tag || !doc.domain_tag.empty();
  }
  if (any_label) out.labels.reserve(docs.size());
  if (any_tag) out.domain_tags.reserve(docs.size());

  for (std::size_t r = 0; r < docs.size(); ++r) {
    const auto counts = term_counts(docs[r].text);
    for (const auto& [term, count] : counts) {
      const auto it = model.vocab.term_to_index.find(term);
      if (it == model.vocab.term_to_index.end()) continue;  // out of vocabulary
      out.z(static_cast<Eigen::Index>(r), it->second) =
          static_cast<double>(count) * model.idf[static_cast<std::size_t>(it->second)];
    }
    const double norm = out.z.row(static_cast<Eigen::Index>(r)).norm();
    if (norm > 0.0) out.z.row(static_cast<Eigen::Index>(r)) /= norm;
    if (any_label) out.labels.push_back(docs[r].label);
    if (any_tag) out.domain_tags.push_back(docs[r].domain_tag);
  }
  return out;
}

AutoencoderResult pretrain_autoencoder(const EncodedDataset& all_data,
                                       const AutoencoderConfig& config) {
  all_data.validate();
  const int d = static_cast<int>(all_data.dim());
  const Eigen::Index n = all_data.rows();
  if (n == 0) throw DataError("autoencoder pre-training needs at least one row");
  if (config.latent_dim >= d) {
    throw SpecError("autoencoder latent_dim must be smaller than the input dim");
  }
  if (config.latent_dim <= 0 || config.hidden_dim <= 0 || config.epochs < 0 ||
      config.batch_size <= 0) {
    throw ConfigError("autoencoder config values must be positive");
  }

  MlpSpec enc_spec{{d, config.hidden_dim, config.latent_dim}, Activation::kRelu,
                   OutputActivation::kTanh};
  MlpSpec dec_spec{{config.latent_dim, config.hidden_dim, d}, Activation::kRelu,
                   OutputActivation::kLinear};
  MlpParams enc = init_params(enc_spec, derive_seed(config.seed, 0xE5C0DE));
  MlpParams dec = init_params(dec_spec, derive_seed(config.seed, 0xDEC0DE));
  AdamState enc_opt = AdamState::like(enc, config.base_lr, config.lr_decay_every);
  AdamState dec_opt = AdamState::like(dec, config.base_lr, config.lr_decay_every);

  Rng shuffle_rng(derive_seed(config.seed, 0x5FF1E));
  const Eigen::Index batch = std::min<Eigen::Index>(config.batch_size, n);

  AutoencoderResult result;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    long batches = 0;
    for (Eigen::Index start = 0; start + batch <= n; start += batch) {
      Eigen::MatrixXd x(batch, d);
      for (Eigen::Index i = 0; i < batch; ++i) {
        x.row(i) = all_data.z.row(order[static_cast<std::size_t>(start + i)]);
      }
      ad::Tape tape;
      StagedMlp enc_net = stage(tape, enc, /*trainable=*/true);
      StagedMlp dec_net = stage(tape, dec, /*trainable=*/true);
      ad::Node input = tape.constant(x);
      ad::Node recon = forward(tape, dec_net, forward(tape, enc_net, input));
      ad::Node diff = tape.sub(recon, input);
      ad::Node loss = tape.mean(tape.mul(diff, diff));
      tape.backward(loss);
      adam_step(enc, MlpGrads::from_tape(tape, enc_net), enc_opt);
      adam_step(dec, MlpGrads::from_tape(tape, dec_net), dec_opt);
      loss_sum += tape.scalar(loss);
      ++batches;
    }
    result.epoch_losses.push_back(batches > 0 ? loss_sum / static_cast<double>(batches)
                                              : 0.0);
  }
  result.encoder = std::move(enc);
  return result;
}

EncodedDataset encode_with(const MlpParams& encoder, const EncodedDataset& data) {
  EncodedDataset out;
  out.z = forward_values(encoder, data.z);
  out.labels = data.labels;
  out.domain_tags = data.domain_tags;
  return out;
}

namespace {

[[noreturn]] void fail_line(const std::string& path, long line, const std::string& what) {
  throw FormatError(path + ":" + std::to_string(line) + ": " + what);
}

int parse_int(const std::string& s, const std::string& path, long line,
              const std::string& what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail_line(path, line, "expected an integer for " + what + ", got '" + s + "'");
  }
  return v;
}

double parse_double(const char* begin, const char* end, const char** next,
                    const std::string& path, long line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr == begin) {
    fail_line(path, line, "expected a decimal value");
  }
  if (!std::isfinite(v)) fail_line(path, line, "non-finite value");
  *next = ptr;
  return v;
}

}  // namespace

std::vector<Document> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path);
  std::vector<Document> docs;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t t1 = line.find('\t');
    if (t1 == std::string::npos) fail_line(path, line_no, "expected 3 tab-separated fields");
    const std::size_t t2 = line.find('\t', t1 + 1);
    if (t2 == std::string::npos) fail_line(path, line_no, "expected 3 tab-separated fields");
    Document doc;
    const std::string label_field = line.substr(0, t1);
    if (label_field != "-") {
      doc.label = parse_int(label_field, path, line_no, "the label field");
      if (doc.label < 0) fail_line(path, line_no, "labels must be nonnegative or '-'");
    }
    const std::string domain_field = line.substr(t1 + 1, t2 - t1 - 1);
    if (domain_field != "-") doc.domain_tag = domain_field;
    doc.text = line.substr(t2 + 1);
    docs.push_back(std::move(doc));
  }
  return docs;
}

void save_corpus(const std::string& path, const std::vector<Document>& docs) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open corpus file for writing: " + path);
  for (const auto& doc : docs) {
    if (doc.text.find('\t') != std::string::npos ||
        doc.text.find('\n') != std::string::npos) {
      throw DataError("corpus text may not contain tabs or newlines");
    }
    if (doc.domain_tag.find('\t') != std::string::npos) {
      throw DataError("domain tags may not contain tabs");
    }
    if (doc.label >= 0) {
      out << doc.label;
    } else {
      out << '-';
    }
    out << '\t' << (doc.domain_tag.empty() ? "-" : doc.domain_tag) << '\t' << doc.text
        << '\n';
  }
  if (!out) throw DataError("failed writing corpus file: " + path);
}

EncodedDataset load_external_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file: " + path);
  std::string line;
  if (!std::getline(in, line)) fail_line(path, 1, "missing header line");

  long n = 0;
  long d = 0;
  {
    // Header: n=<rows> d=<dim>
    std::istringstream hs(line);
    std::string n_field, d_field, extra;
    hs >> n_field >> d_field;
    if (hs >> extra || n_field.rfind("n=", 0) != 0 || d_field.rfind("d=", 0) != 0) {
      fail_line(path, 1, "header must be 'n=<rows> d=<dim>'");
    }
    n = parse_int(n_field.substr(2), path, 1, "row count");
    d = parse_int(d_field.substr(2), path, 1, "dimension");
    if (n < 0 || d <= 0) fail_line(path, 1, "row count and dimension must be positive");
  }

  EncodedDataset out;
  out.z.resize(n, d);
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  std::vector<std::string> tags(static_cast<std::size_t>(n));
  bool any_label = false;
  bool any_tag = false;

  long row = 0;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (row >= n) fail_line(path, line_no, "more rows than the header's n");

    const char* p = line.data();
    const char* end = line.data() + line.size();
    auto skip_spaces = [&] {
      while (p < end && *p == ' ') ++p;
    };
    skip_spaces();
    if (std::string_view(p, static_cast<std::size_t>(end - p)).starts_with("label=")) {
      p += 6;
      const char* tok_end = p;
      while (tok_end < end && *tok_end != ' ') ++tok_end;
      labels[static_cast<std::size_t>(row)] =
          parse_int(std::string(p, tok_end), path, line_no, "the label prefix");
      any_label = true;
      p = tok_end;
      skip_spaces();
    }
    if (std::string_view(p, static_cast<std::size_t>(end - p)).starts_with("domain=")) {
      p += 7;
      const char* tok_end = p;
      while (tok_end < end && *tok_end != ' ') ++tok_end;
      tags[static_cast<std::size_t>(row)] = std::string(p, tok_end);
      any_tag = true;
      p = tok_end;
      skip_spaces();
    }
    for (long j = 0; j < d; ++j) {
      skip_spaces();
      if (p >= end) fail_line(path, line_no, "row has fewer than d values");
      out.z(row, j) = parse_double(p, end, &p, path, line_no);
    }
    skip_spaces();
    if (p != end) fail_line(path, line_no, "row has more than d values");
    ++row;
  }
  if (row != n) {
    throw FormatError(path + ": expected " + std::to_string(n) + " rows, found " +
                      std::to_string(row));
  }
  if (any_label) out.labels = std::move(labels);
  if (any_tag) out.domain_tags = std::move(tags);
  return out;
}

void save_embeddings(const std::string& path, const EncodedDataset& data) {
  data.validate();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open embedding file for writing: " + path);
  out << "n=" << data.rows() << " d=" << data.dim() << '\n';
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    bool first = true;
    auto sep = [&]() -> const char* {
      if (first) {
        first = false;
        return "";
      }
      return " ";
    };
    if (!data.labels.empty() && data.labels[static_cast<std::size_t>(i)] >= 0) {
      out << sep() << "label=" << data.labels[static_cast<std::size_t>(i)];
    }
    if (!data.domain_tags.empty() && !data.domain_tags[static_cast<std::size_t>(i)].empty()) {
      const std::string& tag = data.domain_tags[static_cast<std::size_t>(i)];
      if (tag.find(' ') != std::string::npos) {
        throw DataError("domain tags may not contain spaces in embedding files");
      }
      out << sep() << "domain=" << tag;
    }
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
      out << sep() << format_double(data.z(i, j));
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing embedding file: " + path);
}

}  // namespace ccgan
