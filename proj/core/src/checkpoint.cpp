#include "ccgan/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "ccgan/errors.hpp"

namespace ccgan {

namespace {

constexpr char kMagic[6] = {'C', 'C', 'G', 'A', 'N', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are written little-endian via memcpy");
static_assert(sizeof(double) == 8 && std::numeric_limits<double>::is_iec559,
              "checkpoint payloads assume IEEE-754 binary64");

void put_u32(std::ostream& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.write(buf, 4);
}

void put_i64(std::ostream& out, std::int64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.write(buf, 8);
}

void put_f64(std::ostream& out, double v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.write(buf, 8);
}

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

// Row-major payload regardless of Eigen's internal layout.
void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      put_f64(out, m(i, j));
    }
  }
}

void put_row(std::ostream& out, const Eigen::RowVectorXd& v) {
  for (Eigen::Index j = 0; j < v.cols(); ++j) put_f64(out, v(j));
}

class Reader {
 public:
  explicit Reader(std::istream& in, const std::string& path) : in_(in), path_(path) {}

  void raw(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError("truncated checkpoint file: " + path_);
    }
  }
  std::uint32_t u32() {
    char buf[4];
    raw(buf, 4);
    std::uint32_t v;
    std::memcpy(&v, buf, 4);
    return v;
  }
  std::int64_t i64() {
    char buf[8];
    raw(buf, 8);
    std::int64_t v;
    std::memcpy(&v, buf, 8);
    return v;
  }
  double f64() {
    char buf[8];
    raw(buf, 8);
    double v;
    std::memcpy(&v, buf, 8);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > (1u << 20)) throw FormatError("implausible string length in checkpoint: " + path_);
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = f64();
    }
    return m;
  }
  Eigen::RowVectorXd row(Eigen::Index cols) {
    Eigen::RowVectorXd v(cols);
    for (Eigen::Index j = 0; j < cols; ++j) v(j) = f64();
    return v;
  }

 private:
  std::istream& in_;
  const std::string& path_;
};

}  // namespace

const CheckpointEntry* Checkpoint::find(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

const CheckpointEntry& Checkpoint::require(const std::string& name) const {
  const CheckpointEntry* e = find(name);
  if (e == nullptr) throw FormatError("checkpoint is missing network '" + name + "'");
  return *e;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open checkpoint file for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  put_u32(out, static_cast<std::uint32_t>(ckpt.entries.size()));
  for (const auto& e : ckpt.entries) {
    e.params.spec.validate();
    put_string(out, e.name);
    const auto& dims = e.params.spec.layer_dims;
    put_u32(out, static_cast<std::uint32_t>(dims.size()));
    for (int d : dims) put_u32(out, static_cast<std::uint32_t>(d));
    out.put(static_cast<char>(e.params.spec.hidden_activation));
    out.put(static_cast<char>(e.params.spec.output_activation));
    for (std::size_t l = 0; l < e.params.weights.size(); ++l) {
      put_matrix(out, e.params.weights[l]);
      put_row(out, e.params.biases[l]);
    }
    out.put(e.adam.has_value() ? 1 : 0);
    if (e.adam.has_value()) {
      const AdamState& s = *e.adam;
      put_f64(out, s.beta1);
      put_f64(out, s.beta2);
      put_f64(out, s.eps);
      put_f64(out, s.weight_decay);
      put_f64(out, s.base_lr);
      put_f64(out, s.decay_factor);
      put_i64(out, s.decay_every);
      put_i64(out, s.t);
      for (std::size_t l = 0; l < e.params.weights.size(); ++l) {
        put_matrix(out, s.m_w[l]);
        put_matrix(out, s.v_w[l]);
        put_row(out, s.m_b[l]);
        put_row(out, s.v_b[l]);
      }
    }
  }
  out.flush();
  if (!out) throw DataError("failed writing checkpoint file: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint file: " + path);
  Reader r(in, path);

  char magic[6];
  r.raw(magic, 6);
  if (std::memcmp(magic, kMagic, 6) != 0) {
    throw FormatError("not a checkpoint file (bad magic): " + path);
  }

  Checkpoint ckpt;
  const std::uint32_t n = r.u32();
  if (n > 1024) throw FormatError("implausible network count in checkpoint: " + path);
  ckpt.entries.reserve(n);
  for (std::uint32_t k = 0; k < n; ++k) {
    CheckpointEntry e;
    e.name = r.str();
    const std::uint32_t n_dims = r.u32();
    if (n_dims < 2 || n_dims > 64) {
      throw FormatError("implausible layer count in checkpoint: " + path);
    }
    e.params.spec.layer_dims.resize(n_dims);
    for (auto& d : e.params.spec.layer_dims) {
      const std::uint32_t dim = r.u32();
      if (dim == 0 || dim > (1u << 24)) {
        throw FormatError("implausible layer dim in checkpoint: " + path);
      }
      d = static_cast<int>(dim);
    }
    char h = 0, o = 0;
    r.raw(&h, 1);
    r.raw(&o, 1);
    if (h > 1 || o > 3) throw FormatError("unknown activation code in checkpoint: " + path);
    e.params.spec.hidden_activation = static_cast<Activation>(h);
    e.params.spec.output_activation = static_cast<OutputActivation>(o);
    const auto& dims = e.params.spec.layer_dims;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      e.params.weights.push_back(r.matrix(dims[l], dims[l + 1]));
      e.params.biases.push_back(r.row(dims[l + 1]));
    }
    char has_adam = 0;
    r.raw(&has_adam, 1);
    if (has_adam != 0 && has_adam != 1) {
      throw FormatError("corrupt optimizer flag in checkpoint: " + path);
    }
    if (has_adam == 1) {
      AdamState s;
      s.beta1 = r.f64();
      s.beta2 = r.f64();
      s.eps = r.f64();
      s.weight_decay = r.f64();
      s.base_lr = r.f64();
      s.decay_factor = r.f64();
      s.decay_every = static_cast<int>(r.i64());
      s.t = static_cast<long>(r.i64());
      for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        s.m_w.push_back(r.matrix(dims[l], dims[l + 1]));
        s.v_w.push_back(r.matrix(dims[l], dims[l + 1]));
        s.m_b.push_back(r.row(dims[l + 1]));
        s.v_b.push_back(r.row(dims[l + 1]));
      }
      e.adam = std::move(s);
    }
    ckpt.entries.push_back(std::move(e));
  }
  return ckpt;
}

}  // namespace ccgan
