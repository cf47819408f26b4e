// Unit tests for the alignment metric: hand-checked values, error paths,
// invariance properties, and equivalence with the brute-force oracle.
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "mlab/cka.hpp"
#include "mlab/nn.hpp"
#include "oracle_cka.hpp"

using namespace mlab;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = gauss(rng);
  return m;
}

Eigen::MatrixXd random_orthogonal(Eigen::Index d, std::uint64_t seed) {
  Eigen::MatrixXd m = random_matrix(d, d, seed);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  return qr.householderQ();
}

}  // namespace

TEST_CASE("standardize: hand-computed column") {
  // column [1, 3]: mean 2, population std 1 -> [-1, 1]
  Eigen::MatrixXd m(2, 1);
  m << 1.0, 3.0;
  const ActivationMatrix out = standardize(ActivationMatrix(m));
  CHECK(out.data(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(out.data(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("standardize: all-zero matrix stays zero") {
  const ActivationMatrix out =
      standardize(ActivationMatrix(Eigen::MatrixXd::Zero(4, 3)));
  CHECK(out.data.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("standardize: idempotent on standardized input") {
  const ActivationMatrix once =
      standardize(ActivationMatrix(random_matrix(12, 5, 101)));
  const ActivationMatrix twice = standardize(once);
  CHECK((twice.data - once.data).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("standardize: column stats and degenerate column") {
  Eigen::MatrixXd m = random_matrix(9, 4, 55);
  m.col(2).setConstant(3.25);  // zero-variance column
  const ActivationMatrix out = standardize(ActivationMatrix(m));
  for (int c = 0; c < 4; ++c) {
    CHECK(std::abs(out.data.col(c).mean()) < 1e-12);
  }
  // constant column is centered, not scaled
  CHECK(out.data.col(2).cwiseAbs().maxCoeff() < 1e-12);
  // live columns have unit population variance
  const double var0 = out.data.col(0).squaredNorm() / 9.0;
  CHECK(var0 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("standardize: rejects non-finite input and single rows") {
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, std::nan(""), 0.0, 1.0;
  CHECK_THROWS_AS(standardize(ActivationMatrix(bad)), NonFiniteInput);
  CHECK_THROWS_AS(ActivationMatrix(Eigen::MatrixXd::Zero(1, 3)), ShapeMismatch);
}

TEST_CASE("linear_kernel: identity input") {
  const KernelMatrix k =
      linear_kernel(ActivationMatrix(Eigen::MatrixXd::Identity(2, 2)));
  CHECK(!k.centered);
  CHECK((k.data - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("linear_kernel: hand dot products") {
  Eigen::MatrixXd h(3, 2);
  h << 1, 0, 0, 1, 1, 1;
  Eigen::MatrixXd expected(3, 3);
  expected << 1, 0, 1, 0, 1, 1, 1, 1, 2;
  const KernelMatrix k = linear_kernel(ActivationMatrix(h));
  CHECK((k.data - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("linear_kernel: trace equals squared Frobenius norm") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Eigen::MatrixXd h = random_matrix(10, 6, seed);
    const KernelMatrix k = linear_kernel(ActivationMatrix(h));
    CHECK(k.data.trace() ==
          doctest::Approx(h.squaredNorm()).epsilon(1e-12));
    // exact symmetry by construction
    CHECK((k.data - k.data.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("center_kernel: constant matrix is annihilated") {
  KernelMatrix k{Eigen::MatrixXd::Constant(5, 5, 2.5), false};
  const KernelMatrix c = center_kernel(k);
  CHECK(c.centered);
  CHECK(c.data.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("center_kernel: hand-applied centering matrix") {
  // C = [[.5,-.5],[-.5,.5]] both sides maps diag(2,2) to [[1,-1],[-1,1]]
  Eigen::MatrixXd k(2, 2);
  k << 2, 0, 0, 2;
  Eigen::MatrixXd expected(2, 2);
  expected << 1, -1, -1, 1;
  const KernelMatrix c = center_kernel(KernelMatrix{k, false});
  CHECK((c.data - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("center_kernel: no-op on already mean-zero kernel") {
  const Eigen::MatrixXd h = random_matrix(8, 3, 7);
  const KernelMatrix k = linear_kernel(ActivationMatrix(h));
  const KernelMatrix once = center_kernel(k);
  const KernelMatrix again = center_kernel(KernelMatrix{once.data, false});
  CHECK((again.data - once.data).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("center_kernel: rejects a centered flag") {
  KernelMatrix k{Eigen::MatrixXd::Identity(3, 3), true};
  CHECK_THROWS_AS(center_kernel(k), AlreadyCentered);
}

TEST_CASE("center_kernel: output rows sum to ~0 and matches explicit C") {
  for (std::uint64_t seed : {11u, 12u}) {
    const Eigen::MatrixXd h = random_matrix(9, 4, seed);
    const KernelMatrix k = linear_kernel(ActivationMatrix(h));
    const KernelMatrix c = center_kernel(k);
    const double trace = c.data.trace();
    CHECK(c.data.rowwise().sum().cwiseAbs().maxCoeff() <=
          1e-9 * std::max(1.0, trace));
    const Eigen::MatrixXd ref = oracle::center(k.data);
    CHECK((c.data - ref).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("hsic: self value is the squared Frobenius norm") {
  const KernelMatrix c =
      center_kernel(linear_kernel(ActivationMatrix(random_matrix(7, 3, 21))));
  const double v = hsic(c, c);
  CHECK(v >= 0.0);
  CHECK(v == doctest::Approx(c.data.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("hsic: zero kernel gives zero") {
  KernelMatrix z{Eigen::MatrixXd::Zero(4, 4), true};
  const KernelMatrix c =
      center_kernel(linear_kernel(ActivationMatrix(random_matrix(4, 2, 3))));
  CHECK(hsic(z, c) == 0.0);
}

TEST_CASE("hsic: hand elementwise product sum") {
  Eigen::MatrixXd a(2, 2), b(2, 2);
  a << 1, -1, -1, 1;
  b << 2, -2, -2, 2;
  CHECK(hsic(KernelMatrix{a, true}, KernelMatrix{b, true}) ==
        doctest::Approx(8.0).epsilon(1e-15));
}

TEST_CASE("hsic: error paths") {
  KernelMatrix a{Eigen::MatrixXd::Zero(3, 3), true};
  KernelMatrix b{Eigen::MatrixXd::Zero(4, 4), true};
  CHECK_THROWS_AS(hsic(a, b), DimensionMismatch);
  KernelMatrix raw{Eigen::MatrixXd::Zero(3, 3), false};
  CHECK_THROWS_AS(hsic(a, raw), NotCentered);
  CHECK_THROWS_AS(hsic(raw, a), NotCentered);
}

TEST_CASE("cka: self-alignment is exactly 1") {
  const ActivationMatrix h(random_matrix(10, 4, 31));
  const AlignmentScore s = cka(h, h);
  CHECK(std::abs(s.cka - 1.0) <= 1e-12);
  CHECK(s.cka == doctest::Approx(s.hsic_st / std::sqrt(s.hsic_ss * s.hsic_tt))
                     .epsilon(1e-15));
}

TEST_CASE("cka: orthogonal and scale invariance") {
  const Eigen::MatrixXd h = random_matrix(12, 5, 41);
  const Eigen::MatrixXd q = random_orthogonal(5, 42);
  const AlignmentScore rot = cka(ActivationMatrix(h), ActivationMatrix(h * q));
  CHECK(std::abs(rot.cka - 1.0) <= 1e-9);
  const AlignmentScore scl =
      cka(ActivationMatrix(h), ActivationMatrix(3.7 * h));
  CHECK(std::abs(scl.cka - 1.0) <= 1e-9);
}

TEST_CASE("cka: matches brute-force oracle on random 8x3 pair") {
  const Eigen::MatrixXd a = random_matrix(8, 3, 51);
  const Eigen::MatrixXd b = random_matrix(8, 3, 52);
  const AlignmentScore s = cka(ActivationMatrix(a), ActivationMatrix(b));
  CHECK(std::abs(s.cka - oracle::cka(a, b)) <= 1e-12);
}

TEST_CASE("cka: error paths") {
  const ActivationMatrix a(random_matrix(6, 3, 61));
  const ActivationMatrix b(random_matrix(7, 3, 62));
  CHECK_THROWS_AS(cka(a, b), RowCountMismatch);
  // constant activations: centering annihilates the kernel
  const ActivationMatrix flat(Eigen::MatrixXd::Constant(6, 3, 1.0));
  CHECK_THROWS_AS(cka(a, flat), DegenerateActivations);
  CHECK_THROWS_AS(cka(flat, a), DegenerateActivations);
}

TEST_CASE("cka properties over random instances") {
  std::mt19937_64 meta(777);
  std::uniform_int_distribution<int> rows(2, 32), cols(1, 16);
  int oracle_checked = 0;
  for (int it = 0; it < 100; ++it) {
    const Eigen::Index n = rows(meta);
    const Eigen::Index da = cols(meta);
    const Eigen::Index db = cols(meta);
    const Eigen::MatrixXd a = random_matrix(n, da, 1000 + it);
    const Eigen::MatrixXd b = random_matrix(n, db, 2000 + it);
    const ActivationMatrix ha(a), hb(b);

    // symmetry
    const double ab = cka(ha, hb).cka;
    const double ba = cka(hb, ha).cka;
    CHECK(std::abs(ab - ba) <= 1e-12);

    // boundedness
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0 + 1e-12);

    // oracle equivalence (naive centering matrix, triple products)
    CHECK(std::abs(ab - oracle::cka(a, b)) <= 1e-12);
    CHECK(std::abs(cka(ha, hb, true).cka - oracle::cka(a, b, true)) <= 1e-12);
    ++oracle_checked;

    // orthogonal invariance
    const Eigen::MatrixXd q = random_orthogonal(da, 3000 + it);
    CHECK(std::abs(cka(ha, ActivationMatrix(a * q)).cka - 1.0) <= 1e-9);

    // isotropic scale invariance
    for (double c : {1e-3, 1.0, 1e3}) {
      CHECK(std::abs(cka(ha, ActivationMatrix(c * a)).cka - 1.0) <= 1e-9);
    }

    // translation invariance: constant row offset on one side
    Eigen::RowVectorXd v = random_matrix(1, da, 4000 + it);
    Eigen::MatrixXd shifted = a.rowwise() + v;
    CHECK(std::abs(cka(ActivationMatrix(shifted), hb).cka - ab) <= 1e-9);

    // centering is idempotent on the numeric data
    const KernelMatrix kc = center_kernel(linear_kernel(ha));
    const KernelMatrix kcc = center_kernel(KernelMatrix{kc.data, false});
    CHECK((kcc.data - kc.data).cwiseAbs().maxCoeff() <= 1e-12);
  }
  CHECK(oracle_checked == 100);
}

TEST_CASE("actmat: round-trip preserves every bit") {
  const auto dir = std::filesystem::temp_directory_path() / "mlab_actmat_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "h.actmat").string();

  ActivationMatrix h(random_matrix(9, 5, 71), "layer-2/expert");
  save_actmat(h, path);
  const ActivationMatrix back = load_actmat(path);
  CHECK(back.tag == h.tag);
  REQUIRE(back.rows() == h.rows());
  REQUIRE(back.dim() == h.dim());
  CHECK((back.data - h.data).cwiseAbs().maxCoeff() == 0.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("actmat: rejects bad magic and unknown version") {
  const auto dir = std::filesystem::temp_directory_path() / "mlab_actmat_bad";
  std::filesystem::create_directories(dir);
  const std::string good = (dir / "good.actmat").string();
  save_actmat(ActivationMatrix(random_matrix(3, 2, 81), "t"), good);

  // corrupt the magic
  {
    std::fstream f(good, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XXXX", 4);
  }
  CHECK_THROWS_AS(load_actmat(good), ParseError);

  // valid magic, unsupported version
  const std::string vpath = (dir / "vers.actmat").string();
  save_actmat(ActivationMatrix(random_matrix(3, 2, 82), "t"), vpath);
  {
    std::fstream f(vpath, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    const std::uint32_t v = 999;
    f.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  CHECK_THROWS_AS(load_actmat(vpath), ParseError);

  CHECK_THROWS_AS(load_actmat((dir / "missing.actmat").string()), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("cka_profile: identical checkpoints score 1 on every layer") {
  const ArchitectureDescriptor arch{{2, 6, 5, 3}, Activation::Tanh};
  const Checkpoint cp = init_checkpoint(arch, 9001);
  const Eigen::MatrixXd probe = random_matrix(16, 2, 91);
  const auto prof = cka_profile(cp, cp, probe);
  REQUIRE(prof.size() == 2);
  for (std::size_t i = 0; i < prof.size(); ++i) {
    CHECK(prof[i].first == static_cast<int>(i));
    CHECK(std::abs(prof[i].second.cka - 1.0) <= 1e-12);
  }
}

TEST_CASE("cka_profile: scaling the final layer leaves hidden layers at 1") {
  const ArchitectureDescriptor arch{{2, 6, 5, 3}, Activation::Tanh};
  const Checkpoint cp = init_checkpoint(arch, 9002);
  Checkpoint scaled = cp;
  scaled.weights.back() *= 2.0;
  const Eigen::MatrixXd probe = random_matrix(16, 2, 92);
  const auto prof = cka_profile(cp, scaled, probe);
  REQUIRE(prof.size() == 2);
  for (const auto& [layer, score] : prof) {
    CHECK(std::abs(score.cka - 1.0) <= 1e-12);
  }
}

TEST_CASE("cka_profile: architecture mismatch is rejected") {
  const Checkpoint a = init_checkpoint({{2, 6, 3}, Activation::Tanh}, 1);
  const Checkpoint b = init_checkpoint({{2, 7, 3}, Activation::Tanh}, 1);
  CHECK_THROWS_AS(cka_profile(a, b, random_matrix(8, 2, 93)),
                  ArchitectureMismatch);
  const Checkpoint c = init_checkpoint({{2, 6, 3}, Activation::Relu}, 1);
  CHECK_THROWS_AS(cka_profile(a, c, random_matrix(8, 2, 94)),
                  ArchitectureMismatch);
}
