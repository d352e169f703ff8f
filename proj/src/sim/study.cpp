#include "lossres/sim/study.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>

#include "lossres/copula/regression.hpp"
#include "lossres/error.hpp"
#include "lossres/resample/copula_resample.hpp"
#include "lossres/risk/metrics.hpp"
#include "lossres/sim/generate.hpp"
#include "lossres/stats.hpp"
#include "lossres/triangle_io.hpp"

namespace lossres::sim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Seed of an independent sub-run identified by (tag, index).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag, std::uint64_t index) {
  return splitmix64(splitmix64(base ^ splitmix64(tag)) + index);
}

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json reserves_json(const Reserves& r) { return {{"R1", r.lob1}, {"R2", r.lob2}, {"R", r.total}}; }

}  // namespace

SweepResult sequence_length_sweep(const PortfolioDataset& data, const SweepConfig& config,
                                  const ParallelOptions& parallel) {
  config.training.validate();
  const auto upper = data.upper();
  const int steps = upper.origins() - 1;
  std::vector<int> lengths = config.lengths;
  if (lengths.empty())
    for (int l = 1; l <= steps; ++l) lengths.push_back(l);
  for (int l : lengths)
    if (l < 1 || l > steps) throw DomainError("sequence_length_sweep: length " + std::to_string(l) + " outside 1..I-1");
  if (config.folds < 1) throw DomainError("sequence_length_sweep: folds must be at least 1");

  std::vector<dt::AnchorSplit> splits;
  if (config.folds == 1) {
    splits.push_back(dt::build_corpus(upper, config.training).split);
  } else {
    Rng rng = stream_rng(config.training.seed, 0x6b666f6c64ULL);
    splits = dt::kfold_anchors(dt::training_anchors(upper.origins()), config.folds, rng);
  }
  std::vector<std::string> companies;
  for (const auto& pair : upper) companies.push_back(pair.company());

  const int folds = static_cast<int>(splits.size());
  const int jobs = static_cast<int>(lengths.size()) * folds;
  std::vector<double> losses(static_cast<std::size_t>(jobs), kNaN);
  for_each_index(jobs, parallel, [&](int job) {
    try {
      const int length = lengths[static_cast<std::size_t>(job / folds)];
      const auto& split = splits[static_cast<std::size_t>(job % folds)];
      auto training = config.training;
      training.history = length;
      const auto samples = dt::build_training_samples(upper, length);
      auto train_set = dt::select(samples, split.train);
      auto validation_set = dt::select(samples, split.validation);
      // Same initial weights for every job: the input width does not depend on the length.
      Rng init = stream_rng(training.seed, 0x696e6974ULL);
      auto model = dt::init_model(dt::Architecture::for_data(upper.origins(), static_cast<int>(upper.size()),
                                                             training.hidden),
                                  companies, init);
      model.normalization = dt::Normalization::from_samples(train_set);
      losses[static_cast<std::size_t>(job)] =
          dt::train(std::move(model), train_set, validation_set, training).best_validation_loss;
    } catch (const std::exception&) {
      losses[static_cast<std::size_t>(job)] = kNaN;
    }
  });

  SweepResult result;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < lengths.size(); ++l) {
    SweepPoint p;
    p.length = lengths[l];
    double sum = 0.0;
    for (int f = 0; f < folds; ++f) {
      const double v = losses[l * static_cast<std::size_t>(folds) + static_cast<std::size_t>(f)];
      p.fold_losses.push_back(v);
      sum += v;
    }
    p.validation_loss = sum / folds;
    if (std::isfinite(p.validation_loss) && p.validation_loss < best) {
      best = p.validation_loss;
      result.best_length = p.length;
    }
    result.points.push_back(std::move(p));
  }
  return result;
}

nlohmann::json to_json(const SweepResult& result) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : result.points) {
    nlohmann::json folds = nlohmann::json::array();
    for (double v : p.fold_losses) folds.push_back(number_or_null(v));
    points.push_back({{"length", p.length}, {"validation_loss", number_or_null(p.validation_loss)}, {"folds", folds}});
  }
  return {{"points", points}, {"best_length", result.best_length}};
}

void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "length,validation_loss\n";
  for (const auto& p : result.points) out << p.length << ',' << format_double(p.validation_loss) << '\n';
}

dt::TrainConfig StudyConfig::default_dt() {
  dt::TrainConfig c;
  c.loss = dt::LossKind::kSymmetric;
  c.hidden = 32;
  return c;
}

dt::TrainConfig StudyConfig::default_fine_tune() {
  dt::TrainConfig c = default_dt();
  c.max_epochs = 100;
  c.patience = 10;
  return c;
}

void StudyConfig::validate() const {
  if (pairs < 1) throw DomainError("study: pairs must be at least 1");
  if (replications < 2) throw DomainError("study: replications must be at least 2");
  if (!(ci_level > 0.0 && ci_level < 1.0)) throw DomainError("study: ci_level must lie in (0, 1)");
  for (double k : levels)
    if (!(k >= 0.6 && k < 1.0)) throw DomainError("study: risk levels must lie in [0.6, 1)");
  if (truth_draws < 2) throw DomainError("study: truth_draws must be at least 2");
  dt.validate();
  fine_tune.validate();
  if (fine_tune.hidden != dt.hidden) throw DomainError("study: fine-tune width must match the DT width");
}

nlohmann::json to_json(const StudyConfig& c) {
  nlohmann::json copulas = nlohmann::json::array(), boot = nlohmann::json::array(), edt = nlohmann::json::array();
  for (auto f : c.copulas) copulas.push_back(std::string(copula::to_string(f)));
  for (auto f : c.bootstrap_copulas) boot.push_back(std::string(copula::to_string(f)));
  for (auto g : c.edt_generators) edt.push_back(std::string(resample::to_string(g)));
  return {{"pairs", c.pairs},
          {"replications", c.replications},
          {"seed", c.seed},
          {"dt", dt::to_json(c.dt)},
          {"fine_tune", dt::to_json(c.fine_tune)},
          {"copulas", copulas},
          {"bootstrap_copulas", boot},
          {"edt_generators", edt},
          {"warm_start", c.warm_start},
          {"levels", c.levels},
          {"ci_level", c.ci_level},
          {"truth_draws", c.truth_draws}};
}

StudyConfig study_config_from_json(const nlohmann::json& j) {
  StudyConfig c;
  c.pairs = j.value("pairs", c.pairs);
  c.replications = j.value("replications", c.replications);
  c.seed = j.value("seed", c.seed);
  if (j.contains("dt")) c.dt = dt::train_config_from_json(j.at("dt"));
  if (j.contains("fine_tune")) c.fine_tune = dt::train_config_from_json(j.at("fine_tune"));
  auto families = [](const nlohmann::json& a) {
    std::vector<copula::CopulaFamily> out;
    for (const auto& v : a) out.push_back(copula::parse_copula_family(v.get<std::string>()));
    return out;
  };
  if (j.contains("copulas")) c.copulas = families(j.at("copulas"));
  if (j.contains("bootstrap_copulas")) c.bootstrap_copulas = families(j.at("bootstrap_copulas"));
  if (j.contains("edt_generators")) {
    c.edt_generators.clear();
    for (const auto& v : j.at("edt_generators")) c.edt_generators.push_back(resample::parse_edt_generator(v.get<std::string>()));
  }
  c.warm_start = j.value("warm_start", c.warm_start);
  c.levels = j.value("levels", c.levels);
  c.ci_level = j.value("ci_level", c.ci_level);
  c.truth_draws = j.value("truth_draws", c.truth_draws);
  c.validate();
  return c;
}

const PointModel& StudyReport::point(const std::string& model) const {
  for (const auto& p : points)
    if (p.model == model) return p;
  throw DomainError("study report has no point model '" + model + "'");
}

const Pipeline& StudyReport::pipeline(const std::string& name) const {
  for (const auto& p : pipelines)
    if (p.name == name) return p;
  throw DomainError("study report has no pipeline '" + name + "'");
}

namespace {

void finish_point(PointModel& m, const Reserves& truth) {
  double s1 = 0.0, s2 = 0.0;
  m.used = 0;
  for (std::size_t p = 0; p < m.reserves.size(); ++p) {
    if (!m.errors[p].empty()) continue;
    s1 += std::abs((m.reserves[p].lob1 - truth.lob1) / truth.lob1);
    s2 += std::abs((m.reserves[p].lob2 - truth.lob2) / truth.lob2);
    ++m.used;
  }
  m.mape1 = m.used > 0 ? s1 / m.used : kNaN;
  m.mape2 = m.used > 0 ? s2 / m.used : kNaN;
}

PairSummary summarize_pair(const resample::ReserveDistribution& dist, const StudyConfig& config,
                           const Reserves& truth) {
  PairSummary s;
  s.kept = static_cast<int>(dist.draws.size());
  s.failures = dist.failures;
  if (s.kept < 2) {
    s.error = "fewer than two kept replications";
    return s;
  }
  const auto total = dist.total();
  const auto r1 = dist.lob1();
  const auto r2 = dist.lob2();
  s.mean = mean(total);
  s.std = sample_std(total);
  s.cv = s.std / s.mean;
  s.ci_lower = risk::var(total, 0.5 * (1.0 - config.ci_level));
  s.ci_upper = risk::var(total, 0.5 * (1.0 + config.ci_level));
  s.covered = truth.total >= s.ci_lower && truth.total <= s.ci_upper;
  for (double k : config.levels) {
    s.tvar.push_back(risk::tvar(total, k));
    s.rc_joint.push_back(risk::risk_capital(total, k));
    s.rc_silo.push_back(risk::silo(r1, r2, k));
  }
  return s;
}

void finish_pipeline(Pipeline& p, std::size_t levels) {
  p.used = 0;
  double cv = 0.0, width = 0.0;
  int covered = 0;
  p.mean_rc_joint.assign(levels, 0.0);
  p.mean_rc_silo.assign(levels, 0.0);
  std::vector<std::vector<double>> tvars(levels);
  for (const auto& s : p.pairs) {
    if (!s.error.empty()) continue;
    ++p.used;
    cv += s.cv;
    width += s.ci_upper - s.ci_lower;
    covered += s.covered ? 1 : 0;
    for (std::size_t l = 0; l < levels; ++l) {
      p.mean_rc_joint[l] += s.rc_joint[l];
      p.mean_rc_silo[l] += s.rc_silo[l];
      tvars[l].push_back(s.tvar[l]);
    }
  }
  const double n = p.used > 0 ? p.used : kNaN;
  p.mean_cv = cv / n;
  p.mean_ci_width = width / n;
  p.coverage = covered / n;
  p.median_tvar.clear();
  for (std::size_t l = 0; l < levels; ++l) {
    p.mean_rc_joint[l] /= n;
    p.mean_rc_silo[l] /= n;
    p.median_tvar.push_back(median(tvars[l]));
  }
}

}  // namespace

StudyReport run_study(const SimParams& params, const StudyConfig& config, const ParallelOptions& parallel) {
  params.validate();
  config.validate();
  StudyReport report;
  report.config = config;
  report.params = params;
  report.truth = expected_reserves(params);

  const auto squares = generate_portfolio(params, config.pairs, config.seed);
  const auto upper = squares.upper();
  for (const auto& pair : squares) {
    report.companies.push_back(pair.company());
    report.realized.push_back(true_reserve(pair));
  }
  const auto n_pairs = static_cast<std::size_t>(config.pairs);

  // True predictive distribution of the total reserve.
  {
    std::vector<double> totals(static_cast<std::size_t>(config.truth_draws));
    const std::uint64_t seed = derive_seed(config.seed, 0x7472757468ULL, 0);
    for_each_index(config.truth_draws, parallel, [&](int k) {
      Rng rng = stream_rng(seed, static_cast<std::uint64_t>(k));
      totals[static_cast<std::size_t>(k)] = true_reserve(generate_pair(params, rng)).total;
    });
    for (double k : config.levels) {
      report.true_tvar.push_back(risk::tvar(totals, k));
      report.true_rc.push_back(risk::risk_capital(totals, k));
    }
  }

  // DT point reserves.
  const auto fitted = dt::fit_dt(upper, config.dt);
  report.dt_best_epoch = fitted.best_epoch;
  report.dt_validation_loss = fitted.best_validation_loss;
  {
    PointModel m;
    m.model = "dt";
    for (const auto& r : dt::predict_reserves(fitted.model, upper, config.dt.history)) {
      m.reserves.push_back(r.reserves);
      m.errors.emplace_back();
    }
    finish_point(m, report.truth);
    report.points.push_back(std::move(m));
  }

  // Copula regressions, one fit per pair and family.
  std::vector<copula::CopulaFamily> families = config.copulas;
  for (auto f : config.bootstrap_copulas)
    if (std::find(families.begin(), families.end(), f) == families.end()) families.push_back(f);
  std::vector<std::vector<std::optional<copula::CopulaRegressionFit>>> fits(families.size());
  std::vector<std::vector<std::string>> fit_errors(families.size());
  for (std::size_t f = 0; f < families.size(); ++f) {
    fits[f].resize(n_pairs);
    fit_errors[f].assign(n_pairs, "");
    for_each_index(config.pairs, parallel, [&](int p) {
      const auto pp = static_cast<std::size_t>(p);
      try {
        copula::FitOptions options;
        options.copula = families[f];
        options.compute_covariance = false;
        auto fit = copula::fit(upper[pp], options);
        if (!fit.convergence.converged) {
          fit_errors[f][pp] = "not converged: " + fit.convergence.message;
        } else {
          fits[f][pp] = std::move(fit);
        }
      } catch (const std::exception& e) {
        fit_errors[f][pp] = e.what();
      }
    });
  }
  for (std::size_t f = 0; f < families.size(); ++f) {
    if (std::find(config.copulas.begin(), config.copulas.end(), families[f]) == config.copulas.end()) continue;
    PointModel m;
    m.model = "copula:" + std::string(copula::to_string(families[f]));
    for (std::size_t p = 0; p < n_pairs; ++p) {
      m.reserves.push_back(fits[f][p] ? copula::fitted_reserves(*fits[f][p], upper[p]) : Reserves{kNaN, kNaN, kNaN});
      m.errors.push_back(fit_errors[f][p]);
    }
    finish_point(m, report.truth);
    report.points.push_back(std::move(m));
  }

  // Parametric bootstrap distributions.
  for (auto family : config.bootstrap_copulas) {
    const auto f = static_cast<std::size_t>(std::find(families.begin(), families.end(), family) - families.begin());
    Pipeline pipe;
    pipe.name = "copula:" + std::string(copula::to_string(family));
    for (std::size_t p = 0; p < n_pairs; ++p) {
      if (!fits[f][p]) {
        PairSummary s;
        s.error = "fit failed: " + fit_errors[f][p];
        pipe.pairs.push_back(s);
        continue;
      }
      const auto seed = derive_seed(config.seed, 0x626f6f74ULL + static_cast<std::uint64_t>(family), p);
      const auto dist = resample::parametric_bootstrap(*fits[f][p], upper[p], config.replications, seed, parallel);
      pipe.pairs.push_back(summarize_pair(dist, config, report.truth));
    }
    finish_pipeline(pipe, config.levels.size());
    report.pipelines.push_back(std::move(pipe));
  }

  // EDT distributions from the study DT.
  for (auto generator : config.edt_generators) {
    resample::EdtConfig edt;
    edt.generator = generator;
    edt.replications = config.replications;
    edt.seed = derive_seed(config.seed, 0x656474ULL + static_cast<std::uint64_t>(generator), 0);
    edt.warm_start = config.warm_start;
    edt.training = config.fine_tune;
    const auto result = resample::edt_predictive_distribution(fitted.model, upper, edt, parallel);
    Pipeline pipe;
    pipe.name = "edt:" + std::string(resample::to_string(generator));
    for (const auto& dist : result.companies) pipe.pairs.push_back(summarize_pair(dist, config, report.truth));
    finish_pipeline(pipe, config.levels.size());
    report.pipelines.push_back(std::move(pipe));
  }
  return report;
}

std::vector<OrderingCheck> study_orderings(const StudyReport& report) {
  std::vector<OrderingCheck> checks;
  const auto& dt_point = report.point("dt");

  {
    OrderingCheck c{"dt_lob1_mape", true, ""};
    c.passed = dt_point.mape1 <= 0.03;
    c.detail = "dt " + format_double(dt_point.mape1);
    for (const auto& p : report.points) {
      if (p.model == "dt") continue;
      c.detail += ", " + p.model + " " + format_double(p.mape1);
      if (!(dt_point.mape1 < p.mape1)) c.passed = false;
    }
    checks.push_back(c);
  }
  {
    OrderingCheck c{"copula_lob2_above_lob1", true, ""};
    for (const auto& p : report.points) {
      if (p.model == "dt") continue;
      c.detail += (c.detail.empty() ? "" : ", ") + p.model + " " + format_double(p.mape2) + " vs " +
                  format_double(p.mape1);
      if (!(p.mape2 > p.mape1)) c.passed = false;
    }
    if (report.points.size() < 2) c.passed = false;
    checks.push_back(c);
  }
  {
    OrderingCheck c{"joint_below_silo_rc99", true, ""};
    const auto& levels = report.config.levels;
    const auto it = std::find_if(levels.begin(), levels.end(), [](double k) { return std::abs(k - 0.99) < 1e-12; });
    bool edt = false, cop = false;
    if (it == levels.end()) {
      c.passed = false;
      c.detail = "level 0.99 not in the ladder";
    } else {
      const auto l = static_cast<std::size_t>(it - levels.begin());
      for (const auto& p : report.pipelines) {
        edt = edt || p.name.starts_with("edt:");
        cop = cop || p.name.starts_with("copula:");
        c.detail += (c.detail.empty() ? "" : ", ") + p.name + " " + format_double(p.mean_rc_joint[l]) + " vs " +
                    format_double(p.mean_rc_silo[l]);
        if (!(p.mean_rc_joint[l] < p.mean_rc_silo[l])) c.passed = false;
      }
      if (!edt || !cop) c.passed = false;
    }
    checks.push_back(c);
  }
  {
    OrderingCheck c{"edt_cv_below_copula", true, ""};
    double edt_max = -1.0, cop_min = std::numeric_limits<double>::infinity();
    for (const auto& p : report.pipelines) {
      c.detail += (c.detail.empty() ? "" : ", ") + p.name + " " + format_double(p.mean_cv);
      if (p.name.starts_with("edt:")) edt_max = std::max(edt_max, p.mean_cv);
      if (p.name.starts_with("copula:")) cop_min = std::min(cop_min, p.mean_cv);
    }
    c.passed = edt_max >= 0.0 && std::isfinite(cop_min) && edt_max < cop_min;
    checks.push_back(c);
  }
  return checks;
}

nlohmann::json to_json(const StudyReport& r) {
  nlohmann::json j;
  j["config"] = to_json(r.config);
  j["params"] = to_json(r.params);
  j["truth"] = reserves_json(r.truth);
  nlohmann::json pairs = nlohmann::json::array();
  for (std::size_t p = 0; p < r.companies.size(); ++p)
    pairs.push_back({{"company", r.companies[p]}, {"realized", reserves_json(r.realized[p])}});
  j["pairs"] = pairs;
  j["dt"] = {{"best_epoch", r.dt_best_epoch}, {"validation_loss", r.dt_validation_loss}};

  nlohmann::json points = nlohmann::json::array();
  for (const auto& m : r.points) {
    nlohmann::json per = nlohmann::json::array();
    for (std::size_t p = 0; p < m.reserves.size(); ++p) {
      nlohmann::json e = {{"company", r.companies[p]}};
      if (m.errors[p].empty()) {
        e["reserves"] = reserves_json(m.reserves[p]);
      } else {
        e["error"] = m.errors[p];
      }
      per.push_back(e);
    }
    points.push_back({{"model", m.model},
                      {"mape_lob1", number_or_null(m.mape1)},
                      {"mape_lob2", number_or_null(m.mape2)},
                      {"pairs_used", m.used},
                      {"pairs", per}});
  }
  j["point_estimates"] = points;

  nlohmann::json pipes = nlohmann::json::array();
  for (const auto& p : r.pipelines) {
    nlohmann::json per = nlohmann::json::array();
    for (std::size_t k = 0; k < p.pairs.size(); ++k) {
      const auto& s = p.pairs[k];
      nlohmann::json e = {{"company", r.companies[k]}, {"kept", s.kept}, {"failures", s.failures}};
      if (!s.error.empty()) {
        e["error"] = s.error;
      } else {
        e["mean"] = s.mean;
        e["std"] = s.std;
        e["cv"] = s.cv;
        e["ci"] = {s.ci_lower, s.ci_upper};
        e["covered"] = s.covered;
        e["tvar"] = s.tvar;
        e["rc_joint"] = s.rc_joint;
        e["rc_silo"] = s.rc_silo;
      }
      per.push_back(e);
    }
    nlohmann::json tv = nlohmann::json::array(), rj = nlohmann::json::array(), rs = nlohmann::json::array();
    for (std::size_t l = 0; l < p.median_tvar.size(); ++l) {
      tv.push_back(number_or_null(p.median_tvar[l]));
      rj.push_back(number_or_null(p.mean_rc_joint[l]));
      rs.push_back(number_or_null(p.mean_rc_silo[l]));
    }
    pipes.push_back({{"name", p.name},
                     {"pairs_used", p.used},
                     {"mean_cv", number_or_null(p.mean_cv)},
                     {"coverage", number_or_null(p.coverage)},
                     {"mean_ci_width", number_or_null(p.mean_ci_width)},
                     {"median_tvar", tv},
                     {"mean_rc_joint", rj},
                     {"mean_rc_silo", rs},
                     {"pairs", per}});
  }
  j["pipelines"] = pipes;
  j["true_risk"] = {{"levels", r.config.levels}, {"tvar", r.true_tvar}, {"risk_capital", r.true_rc}};

  nlohmann::json orderings = nlohmann::json::array();
  for (const auto& c : study_orderings(r))
    orderings.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  j["orderings"] = orderings;
  return j;
}

std::vector<std::filesystem::path> write_study(const StudyReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> files;
  auto add = [&](const std::string& name) {
    files.push_back(dir / name);
    return open_out(files.back());
  };
  {
    auto out = add("report.json");
    out << to_json(r).dump(2) << '\n';
  }
  {
    auto out = add("mape.csv");
    out << "model,mape_lob1,mape_lob2,pairs_used\n";
    for (const auto& m : r.points)
      out << m.model << ',' << format_double(m.mape1) << ',' << format_double(m.mape2) << ',' << m.used << '\n';
  }
  {
    auto out = add("point_reserves.csv");
    out << "company,model,R1,R2,R,realized_R1,realized_R2,realized_R\n";
    for (const auto& m : r.points)
      for (std::size_t p = 0; p < m.reserves.size(); ++p) {
        const auto& e = m.reserves[p];
        const auto& t = r.realized[p];
        out << r.companies[p] << ',' << m.model << ',' << format_double(e.lob1) << ',' << format_double(e.lob2) << ','
            << format_double(e.total) << ',' << format_double(t.lob1) << ',' << format_double(t.lob2) << ','
            << format_double(t.total) << '\n';
      }
  }
  {
    auto out = add("intervals.csv");
    out << "pipeline,company,kept,failures,mean,std,cv,ci_lower,ci_upper,covered,truth\n";
    for (const auto& p : r.pipelines)
      for (std::size_t k = 0; k < p.pairs.size(); ++k) {
        const auto& s = p.pairs[k];
        out << p.name << ',' << r.companies[k] << ',' << s.kept << ',' << s.failures << ',' << format_double(s.mean)
            << ',' << format_double(s.std) << ',' << format_double(s.cv) << ',' << format_double(s.ci_lower) << ','
            << format_double(s.ci_upper) << ',' << (s.covered ? 1 : 0) << ',' << format_double(r.truth.total) << '\n';
      }
  }
  {
    auto out = add("tvar_box.csv");
    out << "pipeline,company,level,tvar,rc_joint,rc_silo\n";
    for (const auto& p : r.pipelines)
      for (std::size_t k = 0; k < p.pairs.size(); ++k) {
        const auto& s = p.pairs[k];
        if (!s.error.empty()) continue;
        for (std::size_t l = 0; l < r.config.levels.size(); ++l)
          out << p.name << ',' << r.companies[k] << ',' << format_double(r.config.levels[l]) << ','
              << format_double(s.tvar[l]) << ',' << format_double(s.rc_joint[l]) << ',' << format_double(s.rc_silo[l])
              << '\n';
      }
  }
  {
    auto out = add("risk_capital.csv");
    out << "pipeline,level,mean_rc_joint,mean_rc_silo,median_tvar\n";
    for (const auto& p : r.pipelines)
      for (std::size_t l = 0; l < r.config.levels.size(); ++l)
        out << p.name << ',' << format_double(r.config.levels[l]) << ',' << format_double(p.mean_rc_joint[l]) << ','
            << format_double(p.mean_rc_silo[l]) << ',' << format_double(p.median_tvar[l]) << '\n';
    for (std::size_t l = 0; l < r.config.levels.size(); ++l)
      out << "true," << format_double(r.config.levels[l]) << ',' << format_double(r.true_rc[l]) << ",,"
          << format_double(r.true_tvar[l]) << '\n';
  }
  return files;
}

}  // namespace lossres::sim
