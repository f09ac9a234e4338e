#include <catch2/catch_amalgamated.hpp>

#include <eegtopo/eigenfeat.hpp>
#include <eegtopo/eigensolve.hpp>
#include <eegtopo/montage.hpp>
#include <eegtopo/synth.hpp>
#include <eegtopo/topomap.hpp>
#include <eegtopo/util.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace eegtopo;

namespace {

Eigen::MatrixXd random_symmetric(Eigen::Index n, GaussianRng& rng) {
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rng.normal();
  return 0.5 * (a + a.transpose()).eval();
}

Eigen::MatrixXd random_psd(Eigen::Index n, GaussianRng& rng) {
  Eigen::MatrixXd b(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) b(i, j) = rng.normal();
  return (b.transpose() * b).eval();
}

// Reference spectrum, descending, via Eigen's solver.
Eigen::VectorXd oracle_eigenvalues(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a,
                                                    Eigen::EigenvaluesOnly);
  Eigen::VectorXd v = es.eigenvalues();
  std::sort(v.data(), v.data() + v.size(), std::greater<double>());
  return v;
}

}  // namespace

TEST_CASE("dense solver reproduces hand-computed spectra") {
  Eigen::MatrixXd a(2, 2);
  a << 2, 1, 1, 2;
  const Eigen::VectorXd l2 = symmetric_eigenvalues_dense(a);
  REQUIRE(l2.size() == 2);
  CHECK(l2[0] == Catch::Approx(3.0).margin(1e-12));
  CHECK(l2[1] == Catch::Approx(1.0).margin(1e-12));

  Eigen::MatrixXd b(3, 3);
  b << 2, 1, 0, 1, 2, 1, 0, 1, 2;
  const Eigen::VectorXd l3 = symmetric_eigenvalues_dense(b);
  REQUIRE(l3.size() == 3);
  const double rt2 = std::sqrt(2.0);
  CHECK(l3[0] == Catch::Approx(2.0 + rt2).margin(1e-12));
  CHECK(l3[1] == Catch::Approx(2.0).margin(1e-12));
  CHECK(l3[2] == Catch::Approx(2.0 - rt2).margin(1e-12));

  // diagonal input: sorted diagonal out
  Eigen::MatrixXd d = Eigen::Vector4d(4.0, -1.0, 7.0, 0.5).asDiagonal();
  const Eigen::VectorXd l4 = symmetric_eigenvalues_dense(d);
  CHECK(l4[0] == Catch::Approx(7.0).margin(1e-12));
  CHECK(l4[3] == Catch::Approx(-1.0).margin(1e-12));

  Eigen::MatrixXd one(1, 1);
  one << -5.5;
  CHECK(symmetric_eigenvalues_dense(one)[0] == -5.5);

  CHECK_THROWS_AS(symmetric_eigenvalues_dense(Eigen::MatrixXd::Zero(2, 3)),
                  DataError);
}

TEST_CASE("dense solver agrees with the reference library solver") {
  GaussianRng rng(101);
  for (Eigen::Index n : {3, 7, 20, 60, 140}) {
    const Eigen::MatrixXd a = random_symmetric(n, rng);
    const Eigen::VectorXd got = symmetric_eigenvalues_dense(a);
    const Eigen::VectorXd want = oracle_eigenvalues(a);
    REQUIRE(got.size() == want.size());
    const double scale = want.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i)
      CHECK(std::abs(got[i] - want[i]) <= 1e-9 * scale);
    // descending order
    for (Eigen::Index i = 1; i < n; ++i) REQUIRE(got[i] <= got[i - 1]);
  }
}

TEST_CASE("randomized solver matches the dense spectrum on PSD inputs") {
  GaussianRng rng(77);
  for (Eigen::Index n : {40, 150, 400}) {
    const Eigen::MatrixXd a = random_psd(n, rng);
    const Eigen::VectorXd want = oracle_eigenvalues(a);
    for (int k : {1, 5, 12}) {
      const Eigen::VectorXd got = top_eigenvalues_randomized(a, k);
      REQUIRE(got.size() == k);
      for (int i = 0; i < k; ++i)
        CHECK(std::abs(got[i] - want[i]) <= 1e-6 * want[0]);
    }
  }
}

TEST_CASE("randomized solver is deterministic in its seed") {
  GaussianRng rng(15);
  const Eigen::MatrixXd a = random_psd(120, rng);
  const Eigen::VectorXd l1 = top_eigenvalues_randomized(a, 6);
  const Eigen::VectorXd l2 = top_eigenvalues_randomized(a, 6);
  CHECK((l1 - l2).cwiseAbs().maxCoeff() == 0.0);

  EigensolveOptions other;
  other.seed = 999;
  const Eigen::VectorXd l3 = top_eigenvalues_randomized(a, 6, other);
  // a different sketch still converges to the same spectrum
  CHECK((l1 - l3).cwiseAbs().maxCoeff() <= 1e-6 * l1[0]);
}

TEST_CASE("top_eigenvalues routes small problems to the dense path") {
  GaussianRng rng(4);
  const Eigen::MatrixXd a = random_psd(80, rng);
  const Eigen::VectorXd top = top_eigenvalues(a, 5);
  const Eigen::VectorXd full = symmetric_eigenvalues_dense(a);
  CHECK((top - full.head(5)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(top_eigenvalues(a, 0), ConfigError);
  CHECK_THROWS_AS(top_eigenvalues(a, 81), ConfigError);
}

TEST_CASE("centering removes the pixel-wise mean") {
  GaussianRng rng(8);
  Eigen::MatrixXd stack(17, 9);
  for (Eigen::Index i = 0; i < stack.size(); ++i) stack(i) = rng.normal(2, 3);
  const Eigen::MatrixXd centered = center_stack(stack);
  CHECK(centered.rowwise().mean().cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(center_stack(Eigen::MatrixXd(5, 0)), DataError);
}

TEST_CASE("gram trick: both sides share the nonzero spectrum") {
  GaussianRng rng(200);
  for (int rep = 0; rep < 25; ++rep) {
    const Eigen::Index d = 5 + static_cast<Eigen::Index>(rng.uniform_index(56));
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform_index(29));
    Eigen::MatrixXd stack(d, n);
    for (Eigen::Index i = 0; i < stack.size(); ++i)
      stack(i) = rng.normal(0.0, 4.0);

    const Eigen::MatrixXd phi = center_stack(stack);
    const Eigen::VectorXd small_side =
        oracle_eigenvalues(phi.transpose() * phi);     // n x n
    const Eigen::VectorXd large_side =
        oracle_eigenvalues(phi * phi.transpose());     // d x d
    const Eigen::Index m = std::min(n, d);
    const double scale = std::max(small_side[0], 1e-300);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double a = small_side[i], b = large_side[i];
      CHECK(std::abs(a - b) <= 1e-8 * scale);
    }

    // the implementation picks the smaller side and satisfies the identities
    const SpectrumResult res = gram_spectrum(stack);
    CHECK(res.side_used == std::min(n, d));
    CHECK(res.used_gram == (n <= d));
    REQUIRE(res.eigenvalues.size() == res.side_used);
    CHECK(std::abs(res.trace - res.centered_sq_norm) <=
          1e-9 * std::max(res.centered_sq_norm, 1e-300));
    for (Eigen::Index i = 0; i < res.eigenvalues.size(); ++i)
      CHECK(std::abs(res.eigenvalues[i] - small_side[i]) <= 1e-8 * scale);

    // centering costs one rank: the structural zero
    if (n <= d) CHECK(res.eigenvalues[n - 1] <= 1e-9 * res.eigenvalues[0]);
  }
}

TEST_CASE("top-k extraction guards its bounds") {
  GaussianRng rng(31);
  Eigen::MatrixXd stack(40, 12);
  for (Eigen::Index i = 0; i < stack.size(); ++i) stack(i) = rng.normal();

  const Eigen::VectorXd top = top_k_eigenvalues(stack, 3);
  REQUIRE(top.size() == 3);
  CHECK(top[0] >= top[1]);
  CHECK(top[1] >= top[2]);
  CHECK(top[2] > 0.0);

  // k is capped by the centered rank n-1 and by the k < 100 feature contract
  CHECK_THROWS_AS(top_k_eigenvalues(stack, 12), DataError);
  const Eigen::VectorXd edge = top_k_eigenvalues(stack, 11);
  REQUIRE(edge.size() == 11);
  CHECK_THROWS_AS(top_k_eigenvalues(stack, 0), ConfigError);
  CHECK_THROWS_AS(top_k_eigenvalues(stack, 100), ConfigError);

  Eigen::MatrixXd wide(40, 150);
  for (Eigen::Index i = 0; i < wide.size(); ++i) wide(i) = rng.normal();
  CHECK(top_k_eigenvalues(wide, 99).size() == 99);
  CHECK_THROWS_AS(top_k_eigenvalues(wide, 100), ConfigError);
  // the sweep path may go one further, to k = 100 inclusive
  CHECK(sweep_eigenvalues(wide, 100).size() == 100);
  CHECK_THROWS_AS(sweep_eigenvalues(wide, 101), ConfigError);

  Eigen::MatrixXd single(40, 1);
  single.setOnes();
  CHECK_THROWS_AS(top_k_eigenvalues(single, 1), DataError);
}

TEST_CASE("top-k values equal the full spectrum prefix") {
  GaussianRng rng(55);
  Eigen::MatrixXd stack(300, 24);
  for (Eigen::Index i = 0; i < stack.size(); ++i)
    stack(i) = rng.normal(0.0, 2.0);
  const Eigen::VectorXd top = top_k_eigenvalues(stack, 10);
  const SpectrumResult full = gram_spectrum(stack);
  CHECK((top - full.eigenvalues.head(10)).cwiseAbs().maxCoeff() <=
        1e-9 * full.eigenvalues[0]);
}

TEST_CASE("question features follow the rendered stack spectra") {
  const Montage montage = geodesic_montage(32);
  SynthesisConfig scfg;
  scfg.n_subjects = 1;
  scfg.n_questions = 2;
  scfg.sample_rate_hz = 125.0;
  auto [rec, events] = synthesize_subject(scfg, montage, 0);

  const TopomapRenderer renderer(montage, rec.eog_channels, 16);
  FeatureSpec spec;
  spec.k = 4;
  spec.stride = 5;

  const auto& ev = events.entries.front();
  const QuestionFeatures feats = extract_question_features(
      renderer, rec, events, ev.question_id, spec);

  CHECK(feats.subject_id == rec.subject_id);
  CHECK(feats.question_id == ev.question_id);
  CHECK(feats.answer == ev.answer);
  CHECK(feats.elapsed_s ==
        Catch::Approx(ev.elapsed_seconds(rec.sample_rate_hz)));
  REQUIRE(feats.red.size() == 4);
  REQUIRE(feats.green.size() == 4);
  REQUIRE(feats.blue.size() == 4);

  // oracle: render the segment by hand and take the top-k per channel
  const Eigen::MatrixXd segment =
      rec.data.middleCols(ev.start_sample, ev.end_sample - ev.start_sample);
  const RgbStack stack = render_stack(renderer, segment, spec.stride);
  CHECK((feats.red - top_k_eigenvalues(stack.red, 4)).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((feats.green - top_k_eigenvalues(stack.green, 4))
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK((feats.blue - top_k_eigenvalues(stack.blue, 4))
            .cwiseAbs()
            .maxCoeff() == 0.0);

  CHECK_THROWS_AS(
      extract_question_features(renderer, rec, events, "nope", spec),
      DataError);
}
