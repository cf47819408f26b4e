// Linear centered kernel alignment (CKA) between activation matrices:
// kernel construction, centering, HSIC, and the normalized alignment score,
// plus the .actmat on-disk format.
//
// All computation is double precision. HSIC is the biased estimator without
// the 1/(L-1)^2 factor; that factor cancels in the CKA ratio, so absolute
// HSIC values are scale-dependent while CKA is not.
#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "mlab/errors.hpp"

namespace mlab {

struct Checkpoint;  // nn.hpp

// L x d matrix of hidden activations; rows are samples (or tokens), columns
// are hidden dimensions. Requires L >= 2, d >= 1 and finite entries.
struct ActivationMatrix {
  Eigen::MatrixXd data;
  std::string tag;

  ActivationMatrix() = default;
  explicit ActivationMatrix(Eigen::MatrixXd m, std::string label = "");

  Eigen::Index rows() const { return data.rows(); }
  Eigen::Index dim() const { return data.cols(); }
};

// L x L Gram matrix. `centered` records whether the centering operator
// C = I - (1/L) 11^T has been applied on both sides.
struct KernelMatrix {
  Eigen::MatrixXd data;
  bool centered = false;

  Eigen::Index rows() const { return data.rows(); }
};

// CKA score together with the three HSIC terms it was formed from.
// cka = hsic_st / sqrt(hsic_ss * hsic_tt).
struct AlignmentScore {
  double cka = 0.0;
  double hsic_st = 0.0;
  double hsic_ss = 0.0;
  double hsic_tt = 0.0;
};

// Self-HSIC below this threshold means the activations are constant after
// centering and CKA is undefined.
inline constexpr double kDegenerateHsic = 1e-30;

// Per-column zero-mean, unit-variance scaling (population variance, divide
// by L). Columns with variance < 1e-15 are centered and left unscaled.
// Throws NonFiniteInput, ShapeMismatch (L < 2).
ActivationMatrix standardize(const ActivationMatrix& h);

// K = H H^T. Exactly symmetric by construction. Throws NonFiniteInput.
KernelMatrix linear_kernel(const ActivationMatrix& h);

// K -> C K C with C = I - (1/L) 11^T. Rows and columns of the result sum
// to ~0. Throws AlreadyCentered if the input flag is set (double centering
// is a mathematical no-op but flags a caller bug).
KernelMatrix center_kernel(const KernelMatrix& k);

// Frobenius inner product sum_ij K1[i][j] * K2[i][j] = tr(K1 K2) for
// symmetric inputs. Both kernels must be centered and share L.
// Throws DimensionMismatch, NotCentered.
double hsic(const KernelMatrix& k1, const KernelMatrix& k2);

// Full alignment score between two activation matrices with equal row
// counts (column counts may differ). When `preprocess` is set, both inputs
// are standardized first; raw library calls default to off, pipeline
// metrics pass on. Throws RowCountMismatch, DegenerateActivations,
// NonFiniteInput.
AlignmentScore cka(const ActivationMatrix& hs, const ActivationMatrix& ht,
                   bool preprocess = false);

// Per-hidden-layer CKA between two checkpoints of identical architecture on
// identical probe inputs. Output is ordered by layer index (0 = first
// hidden layer). Throws ArchitectureMismatch, ShapeMismatch.
std::vector<std::pair<int, AlignmentScore>> cka_profile(
    const Checkpoint& a, const Checkpoint& b, const Eigen::MatrixXd& probe_inputs,
    bool preprocess = false);

// --- .actmat file format --------------------------------------------------
// Magic "ACTM", u32 LE version (currently 1), u64 LE row count L, u64 LE
// column count d, L*d f64 LE values in row-major order, u32 LE tag length,
// tag bytes (UTF-8). Readers reject unknown versions.

inline constexpr std::uint32_t kActmatVersion = 1;

// Throws IoError on filesystem failure.
void save_actmat(const ActivationMatrix& h, const std::string& path);

// Throws IoError, ParseError (bad magic / unknown version / truncation).
ActivationMatrix load_actmat(const std::string& path);

}  // namespace mlab
