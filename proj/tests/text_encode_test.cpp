#include "ccgan/text_encode.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "ccgan/errors.hpp"
#include "ccgan/rng.hpp"

namespace ccgan {
namespace {

std::vector<Document> docs_of(const std::vector<std::string>& texts) {
  std::vector<Document> out;
  for (const auto& t : texts) out.push_back(Document{t, -1, ""});
  return out;
}

// Temp-file helper: unique path per test, removed on destruction.
struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) {
    path = std::string(::testing::TempDir()) + "/" + name;
  }
  ~TempFile() { std::remove(path.c_str()); }
  void write(const std::string& content) const {
    std::ofstream out(path);
    out << content;
  }
};

TEST(Tokenize, LowercasesAndStripsPunctuation) {
  EXPECT_EQ(tokenize("Love SONY."), (std::vector<std::string>{"love", "sony"}));
}

TEST(Tokenize, EmptyTextGivesEmptySequence) {
  EXPECT_TRUE(tokenize("").empty());
}

TEST(Tokenize, KeepsDigitsInsideTokens) {
  EXPECT_EQ(tokenize("4K display!"), (std::vector<std::string>{"4k", "display"}));
}

TEST(Tokenize, SplitsOnNonAlphanumericRuns) {
  EXPECT_EQ(tokenize("it's--great"), (std::vector<std::string>{"it", "s", "great"}));
  EXPECT_TRUE(tokenize("!!! ??").empty());
}

TEST(BuildVocab, ToyCorpusTopTwoWithLexicographicTiebreak) {
  // Counts: "a"=2; "b","c","a b","a c" all 1. The count-1 tie resolves
  // lexicographically, and "a b" sorts before the others.
  Vocabulary v = build_vocab(docs_of({"a b", "a c"}), 2);
  ASSERT_EQ(v.size(), 2);
  EXPECT_EQ(v.term_to_index.count("a"), 1u);
  EXPECT_EQ(v.term_to_index.count("a b"), 1u);
  EXPECT_EQ(v.corpus_size, 2);
  EXPECT_EQ(v.doc_freq[v.term_to_index.at("a")], 2);
  EXPECT_EQ(v.doc_freq[v.term_to_index.at("a b")], 1);
}

TEST(BuildVocab, RetainsEverythingWhenCapExceedsTermCount) {
  Vocabulary v = build_vocab(docs_of({"a b", "a c"}), 100);
  // Distinct terms: a, b, c, "a b", "a c".
  EXPECT_EQ(v.size(), 5);
}

TEST(BuildVocab, IndicesAreDense) {
  Vocabulary v = build_vocab(docs_of({"x y z", "y z w"}), 100);
  std::vector<bool> seen(v.size(), false);
  for (const auto& [term, idx] : v.term_to_index) {
    ASSERT_GE(idx, 0);
    ASSERT_LT(idx, v.size());
    EXPECT_FALSE(seen[idx]) << "duplicate index for " << term;
    seen[idx] = true;
  }
}

TEST(BuildVocab, OrderIndependentAcrossCorpusPermutation) {
  Vocabulary a = build_vocab(docs_of({"red fish", "blue fish", "one fish"}), 4);
  Vocabulary b = build_vocab(docs_of({"one fish", "red fish", "blue fish"}), 4);
  EXPECT_EQ(a.term_to_index, b.term_to_index);
  EXPECT_EQ(a.doc_freq, b.doc_freq);
}

TEST(BuildVocab, EmptyCorpusIsDataError) {
  EXPECT_THROW(build_vocab({}, 5), DataError);
}

TEST(Tfidf, TwoDocHandComputation) {
  // Corpus ["a a b", "b c"], all terms retained.
  // Terms and document frequencies: a:1, b:2, c:1, "a a":1, "a b":1, "b c":1.
  // idf(df) = ln((1+2)/(1+df)) + 1.
  const auto corpus = docs_of({"a a b", "b c"});
  TfidfModel model = fit_tfidf(build_vocab(corpus, 100));
  EncodedDataset enc = tfidf_encode(model, corpus);
  ASSERT_EQ(enc.rows(), 2);
  ASSERT_EQ(enc.dim(), 6);

  const double idf1 = std::log(3.0 / 2.0) + 1.0;  // df = 1
  const double idf2 = std::log(3.0 / 3.0) + 1.0;  // df = 2 -> exactly 1

  const auto& ti = model.vocab.term_to_index;
  ASSERT_EQ(ti.size(), 6u);
  const int i_a = ti.at("a"), i_aa = ti.at("a a"), i_ab = ti.at("a b");
  const int i_b = ti.at("b"), i_bc = ti.at("b c"), i_c = ti.at("c");

  EXPECT_DOUBLE_EQ(model.idf[i_a], idf1);
  EXPECT_DOUBLE_EQ(model.idf[i_b], idf2);

  // Doc 1 "a a b": tf a=2, "a a"=1, "a b"=1, b=1.
  Eigen::RowVectorXd r1 = Eigen::RowVectorXd::Zero(6);
  r1(i_a) = 2.0 * idf1;
  r1(i_aa) = idf1;
  r1(i_ab) = idf1;
  r1(i_b) = 1.0 * idf2;
  r1 /= r1.norm();
  // Doc 2 "b c": tf b=1, "b c"=1, c=1.
  Eigen::RowVectorXd r2 = Eigen::RowVectorXd::Zero(6);
  r2(i_b) = idf2;
  r2(i_bc) = idf1;
  r2(i_c) = idf1;
  r2 /= r2.norm();

  EXPECT_LT((enc.z.row(0) - r1).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((enc.z.row(1) - r2).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Tfidf, OutOfVocabularyDocIsZeroVector) {
  TfidfModel model = fit_tfidf(build_vocab(docs_of({"a b"}), 100));
  EncodedDataset enc = tfidf_encode(model, docs_of({"q r s"}));
  EXPECT_EQ(enc.z.row(0).norm(), 0.0);
}

TEST(Tfidf, RowsAreUnitOrZeroNorm) {
  const auto corpus = docs_of({"good movie", "bad movie", "zz yy", "good good"});
  TfidfModel model = fit_tfidf(build_vocab(corpus, 100));
  EncodedDataset enc = tfidf_encode(model, docs_of({"good movie", "nothing known here"}));
  EXPECT_NEAR(enc.z.row(0).norm(), 1.0, 1e-12);
  EXPECT_EQ(enc.z.row(1).norm(), 0.0);
}

TEST(Tfidf, PositiveIdfForRetainedTerms) {
  TfidfModel model = fit_tfidf(build_vocab(docs_of({"a b", "a c", "a d"}), 100));
  for (double w : model.idf) EXPECT_GT(w, 0.0);
}

TEST(Tfidf, EncodingIsPure) {
  const auto corpus = docs_of({"alpha beta", "beta gamma", "gamma alpha"});
  TfidfModel model = fit_tfidf(build_vocab(corpus, 100));
  EncodedDataset a = tfidf_encode(model, corpus);
  EncodedDataset b = tfidf_encode(model, corpus);
  EXPECT_EQ(a.z, b.z);
}

TEST(Tfidf, CarriesLabelsAndTags) {
  std::vector<Document> docs{{"good", 1, "books"}, {"bad", 0, "dvd"}};
  TfidfModel model = fit_tfidf(build_vocab(docs, 100));
  EncodedDataset enc = tfidf_encode(model, docs);
  ASSERT_TRUE(enc.has_labels());
  EXPECT_EQ(enc.labels, (std::vector<int>{1, 0}));
  EXPECT_EQ(enc.domain_tags, (std::vector<std::string>{"books", "dvd"}));
}

EncodedDataset random_dataset(int n, int d, std::uint64_t seed) {
  EncodedDataset data;
  Rng rng(seed);
  data.z.resize(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) data.z(i, j) = rng.gaussian();
  return data;
}

AutoencoderConfig small_ae_config() {
  AutoencoderConfig cfg;
  cfg.latent_dim = 4;
  cfg.hidden_dim = 16;
  cfg.epochs = 10;
  cfg.batch_size = 16;
  cfg.base_lr = 1e-3;  // visible progress on a tiny problem
  cfg.lr_decay_every = 200;
  cfg.seed = 7;
  return cfg;
}

TEST(Autoencoder, ReconstructionLossNonIncreasingWithTolerance) {
  EncodedDataset data = random_dataset(100, 8, 11);
  AutoencoderResult res = pretrain_autoencoder(data, small_ae_config());
  ASSERT_EQ(res.epoch_losses.size(), 10u);
  for (std::size_t e = 1; e < res.epoch_losses.size(); ++e) {
    EXPECT_LE(res.epoch_losses[e], res.epoch_losses[e - 1] * 1.05)
        << "epoch " << e << " regressed";
  }
}

TEST(Autoencoder, DeterministicPerSeed) {
  EncodedDataset data = random_dataset(60, 8, 3);
  AutoencoderResult a = pretrain_autoencoder(data, small_ae_config());
  AutoencoderResult b = pretrain_autoencoder(data, small_ae_config());
  ASSERT_EQ(a.encoder.weights.size(), b.encoder.weights.size());
  for (std::size_t l = 0; l < a.encoder.weights.size(); ++l) {
    EXPECT_EQ(a.encoder.weights[l], b.encoder.weights[l]);
    EXPECT_EQ(a.encoder.biases[l], b.encoder.biases[l]);
  }
  EXPECT_EQ(a.epoch_losses, b.epoch_losses);
}

TEST(Autoencoder, NeverReadsLabels) {
  EncodedDataset plain = random_dataset(60, 8, 5);
  EncodedDataset labeled = plain;
  labeled.labels.assign(60, 1);
  AutoencoderResult a = pretrain_autoencoder(plain, small_ae_config());
  AutoencoderResult b = pretrain_autoencoder(labeled, small_ae_config());
  for (std::size_t l = 0; l < a.encoder.weights.size(); ++l) {
    EXPECT_EQ(a.encoder.weights[l], b.encoder.weights[l]);
  }
}

TEST(Autoencoder, LatentNotSmallerThanInputIsSpecError) {
  EncodedDataset data = random_dataset(10, 8, 1);
  AutoencoderConfig cfg = small_ae_config();
  cfg.latent_dim = 8;
  EXPECT_THROW(pretrain_autoencoder(data, cfg), SpecError);
}

TEST(Autoencoder, EncodeWithYieldsLatentShapeAndCarriesMetadata) {
  EncodedDataset data = random_dataset(25, 8, 9);
  data.labels.assign(25, 0);
  data.labels[3] = 1;
  data.domain_tags.assign(25, "books");
  AutoencoderResult res = pretrain_autoencoder(data, small_ae_config());
  EncodedDataset enc = encode_with(res.encoder, data);
  EXPECT_EQ(enc.rows(), 25);
  EXPECT_EQ(enc.dim(), 4);
  EXPECT_EQ(enc.labels, data.labels);
  EXPECT_EQ(enc.domain_tags, data.domain_tags);
}

TEST(CorpusIo, RoundTrip) {
  TempFile f("corpus_roundtrip.tsv");
  std::vector<Document> docs{{"I love this camera", 1, "electronics"},
                             {"terrible battery", 0, "electronics"},
                             {"plot summary only", -1, ""}};
  save_corpus(f.path, docs);
  std::vector<Document> back = load_corpus(f.path);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    EXPECT_EQ(back[i].text, docs[i].text);
    EXPECT_EQ(back[i].label, docs[i].label);
    EXPECT_EQ(back[i].domain_tag, docs[i].domain_tag);
  }
}

TEST(CorpusIo, MalformedLineReportsLineNumber) {
  TempFile f("corpus_bad.tsv");
  f.write("1\tbooks\tfine here\nno tabs on this line\n");
  try {
    load_corpus(f.path);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos)
        << "message should carry the line number: " << e.what();
  }
}

TEST(CorpusIo, MissingFileIsDataError) {
  EXPECT_THROW(load_corpus("/nonexistent/corpus.tsv"), DataError);
}

TEST(EmbeddingIo, RoundTripWithLabelsAndDomains) {
  TempFile f("emb_roundtrip.emb");
  EncodedDataset data = random_dataset(4, 3, 21);
  data.labels = {0, 1, -1, 1};
  data.domain_tags = {"books", "dvd", "", "dvd"};
  save_embeddings(f.path, data);
  EncodedDataset back = load_external_embeddings(f.path);
  ASSERT_EQ(back.rows(), 4);
  ASSERT_EQ(back.dim(), 3);
  EXPECT_LT((back.z - data.z).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(back.labels, data.labels);
  EXPECT_EQ(back.domain_tags, data.domain_tags);
}

TEST(EmbeddingIo, HeaderPlusRowsParses) {
  TempFile f("emb_ok.emb");
  f.write("n=2 d=3\n1 2 3\n4 5 6\n");
  EncodedDataset data = load_external_embeddings(f.path);
  EXPECT_EQ(data.rows(), 2);
  EXPECT_EQ(data.dim(), 3);
  EXPECT_DOUBLE_EQ(data.z(1, 2), 6.0);
}

TEST(EmbeddingIo, RaggedRowIsFormatErrorAtThatLine) {
  TempFile f("emb_ragged.emb");
  f.write("n=2 d=3\n1 2 3\n4 5\n");
  try {
    load_external_embeddings(f.path);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(EmbeddingIo, NonFiniteValueIsFormatError) {
  TempFile f("emb_nan.emb");
  f.write("n=1 d=2\nNaN 1\n");
  EXPECT_THROW(load_external_embeddings(f.path), FormatError);
}

TEST(EmbeddingIo, MalformedHeaderIsFormatError) {
  TempFile f("emb_badheader.emb");
  f.write("rows=2 cols=3\n1 2 3\n");
  EXPECT_THROW(load_external_embeddings(f.path), FormatError);
}

TEST(EncodedDatasetValidate, RejectsNonFiniteAndRaggedMetadata) {
  EncodedDataset data = random_dataset(3, 2, 1);
  data.z(1, 1) = std::nan("");
  EXPECT_THROW(data.validate(), DataError);

  EncodedDataset ragged = random_dataset(3, 2, 2);
  ragged.labels = {0, 1};  // 2 labels for 3 rows
  EXPECT_THROW(ragged.validate(), DimensionError);
}

}  // namespace
}  // namespace ccgan
