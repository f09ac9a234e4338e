#include <catch2/catch_amalgamated.hpp>

#include <eegtopo/filter.hpp>
#include <eegtopo/montage.hpp>
#include <eegtopo/ocular.hpp>
#include <eegtopo/util.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

using namespace eegtopo;

namespace {

constexpr double kPi = std::numbers::pi;

// Closed-form magnitude of the analog Butterworth bandpass prototype,
// evaluated at the bilinear-prewarped frequency. Independent of the biquad
// machinery: the implemented cascade must reproduce this exactly.
double analog_oracle_magnitude(const BandpassSpec& spec, double f, double fs) {
  const double w1 = std::tan(kPi * spec.low_cut_hz / fs);
  const double w2 = std::tan(kPi * spec.high_cut_hz / fs);
  const double w = std::tan(kPi * f / fs);
  const double x = (w * w - w1 * w2) / ((w2 - w1) * w);
  return 1.0 / std::sqrt(1.0 + std::pow(x, 2 * spec.order));
}

// DFT of a finite response at one frequency.
double dft_magnitude(const Eigen::VectorXd& y, double f, double fs) {
  std::complex<double> acc{0.0, 0.0};
  for (Eigen::Index i = 0; i < y.size(); ++i)
    acc += y[i] * std::polar(1.0, -2.0 * kPi * f * static_cast<double>(i) / fs);
  return std::abs(acc);
}

Eigen::VectorXd sine(double f, double fs, Eigen::Index n, double amp = 1.0) {
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i)
    x[i] = amp * std::sin(2.0 * kPi * f * static_cast<double>(i) / fs);
  return x;
}

double tone_amplitude(const Eigen::VectorXd& y, Eigen::Index lo,
                      Eigen::Index len) {
  return std::sqrt(2.0 * y.segment(lo, len).squaredNorm() /
                   static_cast<double>(len));
}

}  // namespace

TEST_CASE("bandpass spec validation") {
  const double fs = 250.0;
  BandpassSpec ok;
  ok.validate(fs);

  BandpassSpec bad = ok;
  bad.low_cut_hz = 0.0;
  CHECK_THROWS_AS(bad.validate(fs), ConfigError);
  bad = ok;
  bad.high_cut_hz = 125.0;  // at Nyquist
  CHECK_THROWS_AS(bad.validate(fs), ConfigError);
  bad = ok;
  bad.low_cut_hz = 50.0;
  bad.high_cut_hz = 10.0;
  CHECK_THROWS_AS(bad.validate(fs), ConfigError);
  bad = ok;
  bad.order = 0;
  CHECK_THROWS_AS(bad.validate(fs), ConfigError);
  bad = ok;
  bad.order = 11;
  CHECK_THROWS_AS(bad.validate(fs), ConfigError);
}

TEST_CASE("designed cascade matches the analog prototype magnitude") {
  const double fs = 250.0;
  for (int order : {2, 3, 4, 5}) {
    BandpassSpec spec;
    spec.order = order;
    const auto sections = design_butterworth_bandpass(spec, fs);
    REQUIRE(sections.size() == static_cast<std::size_t>(order));
    for (double f : {0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 40.0, 48.0,
                     55.0, 60.0, 80.0, 100.0, 120.0}) {
      const double got = cascade_magnitude(sections, f, fs);
      const double want = analog_oracle_magnitude(spec, f, fs);
      CHECK(std::abs(got - want) <= 1e-9 + 1e-6 * want);
    }
  }
}

TEST_CASE("difference equations realize the designed response") {
  // Feed an impulse through the actual biquad cascade and DFT the response:
  // the time-domain implementation must match the design-time magnitude.
  const double fs = 250.0;
  BandpassSpec spec;
  const auto sections = design_butterworth_bandpass(spec, fs);
  Eigen::VectorXd impulse = Eigen::VectorXd::Zero(8192);
  impulse[0] = 1.0;
  const Eigen::VectorXd h = filter_forward(sections, impulse);
  for (double f : {2.0, 5.0, 10.0, 25.0, 40.0, 60.0, 90.0}) {
    const double got = dft_magnitude(h, f, fs);
    const double want = cascade_magnitude(sections, f, fs);
    CHECK(got == Catch::Approx(want).margin(1e-6));
  }
}

TEST_CASE("zero-phase filter meets the band spec") {
  const double fs = 250.0;
  BandpassSpec spec;  // 1-48 Hz, order 4
  const auto sections = design_butterworth_bandpass(spec, fs);
  const Eigen::Index n = 2500;  // 10 s

  // DC rejection >= 40 dB
  const Eigen::VectorXd dc = Eigen::VectorXd::Constant(n, 50.0);
  const Eigen::VectorXd dc_out = filtfilt(sections, dc);
  const double dc_ratio = dc_out.segment(n / 4, n / 2).cwiseAbs().maxCoeff() / 50.0;
  CHECK(dc_ratio < 0.01);

  // 10 Hz gain within +/-5 %: 50 whole periods in the central window
  const Eigen::VectorXd pass = filtfilt(sections, sine(10.0, fs, n));
  CHECK(tone_amplitude(pass, n / 4, 1250) ==
        Catch::Approx(1.0).margin(0.05));

  // 60 Hz attenuation >= 20 dB
  const Eigen::VectorXd stop = filtfilt(sections, sine(60.0, fs, n));
  CHECK(tone_amplitude(stop, n / 4, 1250) < 0.1);
}

TEST_CASE("filtfilt output of a symmetric pulse is symmetric") {
  const double fs = 250.0;
  const auto sections = design_butterworth_bandpass(BandpassSpec{}, fs);
  // Keep the pulse far from the record ends: the slow low-cut pole rings for
  // ~160 samples per decade, and the truncated tail is what limits symmetry.
  const Eigen::Index n = 6001;
  Eigen::VectorXd pulse(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = (static_cast<double>(i) - 3000.0) / 50.0;
    pulse[i] = 40.0 * std::exp(-0.5 * d * d);
  }
  const Eigen::VectorXd y = filtfilt(sections, pulse);
  const double scale = y.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    worst = std::max(worst, std::abs(y[i] - y[n - 1 - i]));
  CHECK(worst <= 1e-6 * scale);

  // while the single-pass filter is causal, hence asymmetric
  const Eigen::VectorXd fwd = filter_forward(sections, pulse);
  double fwd_asym = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    fwd_asym = std::max(fwd_asym, std::abs(fwd[i] - fwd[n - 1 - i]));
  CHECK(fwd_asym > 1e-3 * scale);
}

TEST_CASE("filtfilt is linear") {
  const double fs = 250.0;
  const auto sections = design_butterworth_bandpass(BandpassSpec{}, fs);
  GaussianRng rng(11);
  Eigen::VectorXd x(600), y(600);
  for (Eigen::Index i = 0; i < 600; ++i) {
    x[i] = rng.normal(0.0, 10.0);
    y[i] = rng.normal(0.0, 10.0);
  }
  const Eigen::VectorXd lhs = filtfilt(sections, 2.5 * x - 0.75 * y);
  const Eigen::VectorXd rhs =
      2.5 * filtfilt(sections, x) - 0.75 * filtfilt(sections, y);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <=
        1e-9 * rhs.cwiseAbs().maxCoeff());
}

TEST_CASE("filtfilt tolerates very short signals") {
  const auto sections = design_butterworth_bandpass(BandpassSpec{}, 250.0);
  for (Eigen::Index n : {1, 2, 3, 5}) {
    const Eigen::VectorXd y = filtfilt(sections, Eigen::VectorXd::Ones(n));
    REQUIRE(y.size() == n);
    CHECK(y.array().isFinite().all());
  }
  CHECK(filtfilt(sections, Eigen::VectorXd()).size() == 0);
}

TEST_CASE("recording bandpass applies filtfilt per channel") {
  Recording rec;
  rec.subject_id = "S001";
  rec.sample_rate_hz = 250.0;
  GaussianRng rng(3);
  rec.data.resize(4, 800);
  for (Eigen::Index c = 0; c < 4; ++c)
    for (Eigen::Index s = 0; s < 800; ++s) rec.data(c, s) = rng.normal(0, 8.0);

  BandpassSpec spec;
  const Recording out = bandpass(rec, spec);
  REQUIRE(out.data.rows() == rec.data.rows());
  REQUIRE(out.data.cols() == rec.data.cols());
  const auto sections = design_butterworth_bandpass(spec, rec.sample_rate_hz);
  for (Eigen::Index c = 0; c < 4; ++c) {
    const Eigen::VectorXd want = filtfilt(sections, rec.data.row(c).transpose());
    CHECK((out.data.row(c).transpose() - want).cwiseAbs().maxCoeff() < 1e-12);
  }

  spec.zero_phase = false;
  const Recording fwd = bandpass(rec, spec);
  const Eigen::VectorXd want0 =
      filter_forward(sections, rec.data.row(0).transpose());
  CHECK((fwd.data.row(0).transpose() - want0).cwiseAbs().maxCoeff() < 1e-12);
}

// ---------------------------------------------------------------------------
// ocular regression

namespace {

// Smooth 200 uV blink bumps on a quiet baseline.
Eigen::VectorXd blink_train(Eigen::Index n, std::initializer_list<int> centers,
                            double amp, double baseline_phase) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v[i] = 5.0 * std::sin(0.013 * static_cast<double>(i) + baseline_phase);
  for (int c : centers)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = (static_cast<double>(i) - c) / 12.0;
      v[i] += amp * std::exp(-0.5 * d * d);
    }
  return v;
}

Recording ocular_fixture(Eigen::Index n = 4000) {
  Recording rec;
  rec.subject_id = "S001";
  rec.sample_rate_hz = 250.0;
  rec.eog_channels = {6, 7};
  rec.data = Eigen::MatrixXd::Zero(8, n);
  rec.data.row(6) = blink_train(n, {400, 1300, 2600, 3500}, 200.0, 0.0);
  rec.data.row(7) = blink_train(n, {800, 1900, 3100}, 160.0, 1.1);
  GaussianRng rng(21);
  for (Eigen::Index c = 0; c < 6; ++c)
    for (Eigen::Index i = 0; i < n; ++i) rec.data(c, i) = rng.normal(0.0, 10.0);
  return rec;
}

// Makes channel `c` orthogonal to the fit-mean-centered EOG rows over the
// fit samples, so a planted coefficient is recovered exactly.
void orthogonalize_over(Recording& rec, Eigen::Index c,
                        const std::vector<Eigen::Index>& idx) {
  const auto n_eog = static_cast<Eigen::Index>(rec.eog_channels.size());
  const auto m = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd eog(n_eog, m);
  for (Eigen::Index e = 0; e < n_eog; ++e)
    for (Eigen::Index j = 0; j < m; ++j)
      eog(e, j) = rec.data(rec.eog_channels[static_cast<std::size_t>(e)],
                           idx[static_cast<std::size_t>(j)]);
  eog.colwise() -= Eigen::VectorXd(eog.rowwise().mean());

  Eigen::VectorXd target(m);
  for (Eigen::Index j = 0; j < m; ++j)
    target[j] = rec.data(c, idx[static_cast<std::size_t>(j)]);
  const Eigen::VectorXd coef =
      (eog * eog.transpose()).ldlt().solve(eog * target);
  const Eigen::VectorXd correction = eog.transpose() * coef;
  for (Eigen::Index j = 0; j < m; ++j)
    rec.data(c, idx[static_cast<std::size_t>(j)]) -= correction[j];
}

std::vector<Eigen::Index> fit_indices(const Recording& rec,
                                      const OcularSpec& spec) {
  std::vector<Eigen::Index> idx;
  if (spec.fit_on_full_record) {
    for (Eigen::Index i = 0; i < rec.n_samples(); ++i) idx.push_back(i);
  } else {
    const auto mask = detail::blink_mask(rec, spec);
    for (Eigen::Index i = 0; i < rec.n_samples(); ++i)
      if (mask[static_cast<std::size_t>(i)]) idx.push_back(i);
  }
  return idx;
}

}  // namespace

TEST_CASE("planted ocular coefficients are recovered exactly") {
  for (const bool full : {false, true}) {
    OcularSpec spec;
    spec.fit_on_full_record = full;

    Recording rec = ocular_fixture();
    const auto idx = fit_indices(rec, spec);
    REQUIRE(idx.size() > 100);
    orthogonalize_over(rec, 0, idx);
    orthogonalize_over(rec, 1, idx);
    rec.data.row(0) += 0.37 * rec.data.row(6);
    rec.data.row(1) += -0.22 * rec.data.row(6) + 0.55 * rec.data.row(7);

    const OcularModel model = fit_ocular(rec, spec);
    CHECK(model.n_fit_samples == static_cast<std::int64_t>(idx.size()));
    CHECK(model.weights(0, 0) == Catch::Approx(0.37).margin(1e-6));
    CHECK(model.weights(0, 1) == Catch::Approx(0.0).margin(1e-6));
    CHECK(model.weights(1, 0) == Catch::Approx(-0.22).margin(1e-6));
    CHECK(model.weights(1, 1) == Catch::Approx(0.55).margin(1e-6));
  }
}

TEST_CASE("null ocular coefficient is statistically zero") {
  const OcularSpec spec;
  const Recording rec = ocular_fixture();
  const auto idx = fit_indices(rec, spec);
  const OcularModel model = fit_ocular(rec, spec);

  // channel 2 is pure noise, sigma 10; EOG fit-sample sd from the data
  Eigen::VectorXd eog_fit(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j)
    eog_fit[static_cast<Eigen::Index>(j)] = rec.data(6, idx[j]);
  const double sd =
      std::sqrt((eog_fit.array() - eog_fit.mean()).square().mean());
  const double bound = 4.0 * 10.0 / (sd * std::sqrt(double(idx.size())));
  CHECK(std::abs(model.weights(2, 0)) < bound);
}

TEST_CASE("a copied EOG channel regresses to weight one and flattens") {
  Recording rec = ocular_fixture();
  rec.data.row(3) = rec.data.row(6);  // verbatim EOG copy in an EEG site

  const OcularModel model = fit_ocular(rec, OcularSpec{});
  CHECK(model.weights(3, 0) == Catch::Approx(1.0).margin(1e-9));
  CHECK(model.weights(3, 1) == Catch::Approx(0.0).margin(1e-9));

  const Recording out = remove_ocular(rec, model);
  // corrected copy collapses to its mean
  const double dev =
      (out.data.row(3).array() - out.data.row(3).mean()).abs().maxCoeff();
  CHECK(dev < 1e-9 * rec.data.row(6).cwiseAbs().maxCoeff());
}

TEST_CASE("residuals are orthogonal to the EOG over the fit window") {
  OcularSpec spec;
  spec.fit_on_full_record = true;
  Recording rec = ocular_fixture();
  rec.data.row(0) += 0.8 * rec.data.row(6) - 0.3 * rec.data.row(7);

  const OcularModel model = fit_ocular(rec, spec);
  const Recording out = remove_ocular(rec, model);

  for (int e : rec.eog_channels) {
    const Eigen::ArrayXd eog_c =
        rec.data.row(e).array() - rec.data.row(e).mean();
    for (Eigen::Index c = 0; c < 6; ++c) {
      const Eigen::ArrayXd res =
          out.data.row(c).array() - out.data.row(c).mean();
      const double corr = (res * eog_c).sum() /
                          std::sqrt(res.square().sum() * eog_c.square().sum());
      CHECK(std::abs(corr) < 1e-6);
    }
  }
}

TEST_CASE("refitting after correction finds nothing left to remove") {
  for (const bool full : {false, true}) {
    OcularSpec spec;
    spec.fit_on_full_record = full;
    Recording rec = ocular_fixture();
    rec.data.row(0) += 0.6 * rec.data.row(6);
    rec.data.row(4) -= 0.4 * rec.data.row(7);

    const Recording once = remove_ocular(rec, fit_ocular(rec, spec));
    const OcularModel again = fit_ocular(once, spec);
    CHECK(again.weights.cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("ocular correction is affine in the recording") {
  const Recording a = ocular_fixture();
  Recording b = a;
  GaussianRng rng(33);
  for (Eigen::Index c = 0; c < b.data.rows(); ++c)
    for (Eigen::Index i = 0; i < b.data.cols(); ++i)
      b.data(c, i) = rng.normal(0.0, 15.0);

  const OcularModel model = fit_ocular(a, OcularSpec{});

  Recording sum = a;
  sum.data += b.data;
  Recording zero = a;
  zero.data.setZero();

  const Eigen::MatrixXd lhs = remove_ocular(sum, model).data;
  const Eigen::MatrixXd rhs = remove_ocular(a, model).data +
                              remove_ocular(b, model).data -
                              remove_ocular(zero, model).data;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <=
        1e-9 * rhs.cwiseAbs().maxCoeff());
}

TEST_CASE("EOG channels pass through correction unchanged") {
  Recording rec = ocular_fixture();
  rec.data.row(2) += 0.5 * rec.data.row(6);
  const Recording out = remove_ocular(rec, fit_ocular(rec, OcularSpec{}));
  for (int e : rec.eog_channels)
    CHECK((out.data.row(e) - rec.data.row(e)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("degenerate EOG inputs are rejected") {
  // flat EOG channel: zero variance over any fit window
  Recording rec = ocular_fixture();
  rec.data.row(7).setConstant(3.0);
  CHECK_THROWS_AS(fit_ocular(rec, OcularSpec{}), DataError);
  OcularSpec full;
  full.fit_on_full_record = true;
  CHECK_THROWS_AS(fit_ocular(rec, full), DataError);

  // no blinks anywhere: nothing to fit on in epoch mode
  Recording quiet = ocular_fixture();
  quiet.data.row(6) = blink_train(quiet.n_samples(), {}, 0.0, 0.0);
  quiet.data.row(7) = blink_train(quiet.n_samples(), {}, 0.0, 0.7);
  CHECK_THROWS_AS(fit_ocular(quiet, OcularSpec{}), DataError);

  // no EOG channels at all
  Recording none = ocular_fixture();
  none.eog_channels.clear();
  CHECK_THROWS_AS(fit_ocular(none, OcularSpec{}), DataError);

  // model / recording mismatch
  Recording other = ocular_fixture();
  const OcularModel model = fit_ocular(other, OcularSpec{});
  other.eog_channels = {5, 7};
  CHECK_THROWS_AS(remove_ocular(other, model), DataError);
}
