// Alignment metric implementation. center_kernel uses the double-centering
// identity (subtract row/column means, add back the grand mean), which is
// algebraically C K C; the test suite checks it against the explicit
// centering-matrix route.
#include "mlab/cka.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "mlab/nn.hpp"

namespace mlab {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) {
    throw NonFiniteInput(std::string(what) + " contains NaN or Inf");
  }
}

}  // namespace

ActivationMatrix::ActivationMatrix(Eigen::MatrixXd m, std::string label)
    : data(std::move(m)), tag(std::move(label)) {
  if (data.rows() < 2 || data.cols() < 1) {
    throw ShapeMismatch("activation matrix needs L >= 2 rows and d >= 1 columns, got " +
                        std::to_string(data.rows()) + "x" +
                        std::to_string(data.cols()));
  }
  require_finite(data, "activation matrix");
}

ActivationMatrix standardize(const ActivationMatrix& h) {
  require_finite(h.data, "activation matrix");
  const double n = static_cast<double>(h.rows());
  Eigen::MatrixXd out = h.data;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const double mean = out.col(c).mean();
    out.col(c).array() -= mean;
    const double var = out.col(c).squaredNorm() / n;
    if (var >= 1e-15) {
      out.col(c) /= std::sqrt(var);
    }
  }
  return ActivationMatrix(std::move(out), h.tag);
}

KernelMatrix linear_kernel(const ActivationMatrix& h) {
  require_finite(h.data, "activation matrix");
  const Eigen::Index n = h.rows();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  k.selfadjointView<Eigen::Lower>().rankUpdate(h.data);
  k.triangularView<Eigen::StrictlyUpper>() =
      k.transpose().triangularView<Eigen::StrictlyUpper>();
  return KernelMatrix{std::move(k), false};
}

KernelMatrix center_kernel(const KernelMatrix& k) {
  if (k.centered) {
    throw AlreadyCentered("kernel is already centered");
  }
  const Eigen::VectorXd row_means = k.data.rowwise().mean();
  const double grand_mean = row_means.mean();
  Eigen::MatrixXd out = k.data;
  out.colwise() -= row_means;
  out.rowwise() -= row_means.transpose();
  out.array() += grand_mean;
  return KernelMatrix{std::move(out), true};
}

double hsic(const KernelMatrix& k1, const KernelMatrix& k2) {
  if (k1.rows() != k2.rows()) {
    throw DimensionMismatch("kernel sizes differ: " + std::to_string(k1.rows()) +
                            " vs " + std::to_string(k2.rows()));
  }
  if (!k1.centered || !k2.centered) {
    throw NotCentered("hsic requires centered kernels");
  }
  return (k1.data.array() * k2.data.array()).sum();
}

AlignmentScore cka(const ActivationMatrix& hs, const ActivationMatrix& ht,
                   bool preprocess) {
  if (hs.rows() != ht.rows()) {
    throw RowCountMismatch("activation matrices need equal row counts, got " +
                           std::to_string(hs.rows()) + " vs " +
                           std::to_string(ht.rows()));
  }
  const KernelMatrix ks =
      center_kernel(linear_kernel(preprocess ? standardize(hs) : hs));
  const KernelMatrix kt =
      center_kernel(linear_kernel(preprocess ? standardize(ht) : ht));

  AlignmentScore score;
  score.hsic_ss = hsic(ks, ks);
  score.hsic_tt = hsic(kt, kt);
  if (score.hsic_ss < kDegenerateHsic || score.hsic_tt < kDegenerateHsic) {
    throw DegenerateActivations(
        "constant activations after centering; CKA is undefined");
  }
  // tr(K1c K2c) of two PSD kernels is non-negative; a tiny negative here is
  // rounding noise.
  score.hsic_st = std::max(0.0, hsic(ks, kt));
  score.cka = score.hsic_st / std::sqrt(score.hsic_ss * score.hsic_tt);
  return score;
}

std::vector<std::pair<int, AlignmentScore>> cka_profile(
    const Checkpoint& a, const Checkpoint& b,
    const Eigen::MatrixXd& probe_inputs, bool preprocess) {
  if (!(a.descriptor == b.descriptor)) {
    throw ArchitectureMismatch("checkpoints have different architectures");
  }
  const ForwardResult fa = forward(a, probe_inputs);
  const ForwardResult fb = forward(b, probe_inputs);

  std::vector<std::pair<int, AlignmentScore>> profile;
  profile.reserve(fa.hidden.size());
  for (std::size_t layer = 0; layer < fa.hidden.size(); ++layer) {
    const std::string suffix = "/layer" + std::to_string(layer);
    const AlignmentScore s =
        cka(ActivationMatrix(fa.hidden[layer], a.stage_label + suffix),
            ActivationMatrix(fb.hidden[layer], b.stage_label + suffix),
            preprocess);
    profile.emplace_back(static_cast<int>(layer), s);
  }
  return profile;
}

// --- .actmat io -------------------------------------------------------------

namespace {

constexpr char kActmatMagic[4] = {'A', 'C', 'T', 'M'};

template <typename T>
void write_pod(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
  T value{};
  if (!is.read(reinterpret_cast<char*>(&value), sizeof value)) {
    throw ParseError(std::string("truncated file while reading ") + what);
  }
  return value;
}

void write_string(std::ostream& os, const std::string& s) {
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is, const char* what) {
  const auto len = read_pod<std::uint32_t>(is, what);
  std::string s(len, '\0');
  if (len > 0 && !is.read(s.data(), len)) {
    throw ParseError(std::string("truncated file while reading ") + what);
  }
  return s;
}

}  // namespace

void save_actmat(const ActivationMatrix& h, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw IoError("cannot open for writing: " + path);
  }
  os.write(kActmatMagic, 4);
  write_pod<std::uint32_t>(os, kActmatVersion);
  write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(h.rows()));
  write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(h.dim()));
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    for (Eigen::Index j = 0; j < h.dim(); ++j) {
      write_pod<double>(os, h.data(i, j));
    }
  }
  write_string(os, h.tag);
  if (!os) {
    throw IoError("write failed: " + path);
  }
}

ActivationMatrix load_actmat(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw IoError("cannot open: " + path);
  }
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kActmatMagic, 4) != 0) {
    throw ParseError("not an .actmat file: " + path);
  }
  const auto version = read_pod<std::uint32_t>(is, "version");
  if (version != kActmatVersion) {
    throw ParseError("unsupported .actmat version " + std::to_string(version) +
                     " in " + path);
  }
  const auto rows = read_pod<std::uint64_t>(is, "row count");
  const auto cols = read_pod<std::uint64_t>(is, "column count");
  if (rows < 2 || cols < 1 || rows > (1ULL << 32) || cols > (1ULL << 32)) {
    throw ParseError("implausible .actmat dimensions in " + path);
  }
  Eigen::MatrixXd data(static_cast<Eigen::Index>(rows),
                       static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      data(i, j) = read_pod<double>(is, "matrix entry");
    }
  }
  std::string tag = read_string(is, "tag");
  return ActivationMatrix(std::move(data), std::move(tag));
}

}  // namespace mlab
