#include "lossres/resample/edt.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <map>
#include <optional>

#include "lossres/error.hpp"

namespace lossres::resample {

namespace {

const boost::math::normal kStdNormal;

double phi_inv(double u) { return boost::math::quantile(kStdNormal, u); }
double phi(double z) { return boost::math::cdf(kStdNormal, z); }

}  // namespace

std::vector<DevYearTable> dev_year_tables(const std::vector<TrianglePair>& squares) {
  if (squares.empty()) throw DomainError("dev_year_tables: no triangles");
  const int origins = squares.front().lob1.origins();
  std::vector<DevYearTable> tables(static_cast<std::size_t>(origins));
  for (int j = 1; j <= origins; ++j) tables[static_cast<std::size_t>(j - 1)].development = j;
  for (const auto& pair : squares) {
    if (!pair.lob1.is_square() || !pair.lob2.is_square())
      throw DomainError("dev_year_tables: " + pair.company() + " is not a full square");
    if (pair.lob1.origins() != origins) throw DomainError("dev_year_tables: origin counts differ");
    for (int j = 1; j <= origins; ++j) {
      auto& t = tables[static_cast<std::size_t>(j - 1)];
      for (int i = 1; i <= origins; ++i) {
        const double y1 = pair.lob1.value(i, j) / pair.lob1.premium(i);
        const double y2 = pair.lob2.value(i, j) / pair.lob2.premium(i);
        if (!std::isfinite(y1) || !std::isfinite(y2))
          throw DataError("dev_year_tables: non-finite value for " + pair.company());
        t.company.push_back(pair.company());
        t.accident.push_back(i);
        t.y1.push_back(y1);
        t.y2.push_back(y2);
      }
    }
  }
  return tables;
}

EmpiricalMarginal::EmpiricalMarginal(std::vector<double> values) : sorted_(std::move(values)) {
  if (sorted_.empty()) throw DomainError("EmpiricalMarginal: no values");
  std::sort(sorted_.begin(), sorted_.end());
  const double range = sorted_.back() - sorted_.front();
  degenerate_ = !(range > 0.0);
  // Mean spacing: the tail decays over one typical gap between order statistics.
  if (!degenerate_) tail_scale_ = range / static_cast<double>(sorted_.size() - 1);
}

double EmpiricalMarginal::cdf(double x) const {
  if (degenerate_) return 0.5;
  const double n = static_cast<double>(sorted_.size());
  const double edge = 0.5 / n;
  if (x < sorted_.front()) return edge * std::exp((x - sorted_.front()) / tail_scale_);
  if (x > sorted_.back()) return 1.0 - edge * std::exp(-(x - sorted_.back()) / tail_scale_);
  // First order statistic above x; ties resolve to the top of their plateau.
  const auto hi = static_cast<std::size_t>(std::upper_bound(sorted_.begin(), sorted_.end(), x) - sorted_.begin());
  if (hi == sorted_.size()) return 1.0 - edge;
  const std::size_t lo = hi - 1;
  const double p_lo = (static_cast<double>(lo) + 0.5) / n;
  const double w = (x - sorted_[lo]) / (sorted_[hi] - sorted_[lo]);
  return p_lo + w / n;
}

double EmpiricalMarginal::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("EmpiricalMarginal::quantile: u outside (0, 1)");
  if (degenerate_) return sorted_.front();
  const double n = static_cast<double>(sorted_.size());
  const double edge = 0.5 / n;
  if (u < edge) return sorted_.front() + tail_scale_ * std::log(u / edge);
  if (u > 1.0 - edge) return sorted_.back() - tail_scale_ * std::log((1.0 - u) / edge);
  const double pos = u * n - 0.5;
  const auto lo = std::min(static_cast<std::size_t>(pos), sorted_.size() - 2);
  const double w = pos - static_cast<double>(lo);
  return sorted_[lo] + w * (sorted_[lo + 1] - sorted_[lo]);
}

GaussianCopulaSynthesizer GaussianCopulaSynthesizer::fit(const std::vector<double>& y1, const std::vector<double>& y2) {
  if (y1.size() != y2.size() || y1.size() < 2) throw DomainError("GaussianCopulaSynthesizer: need two paired columns");
  GaussianCopulaSynthesizer s;
  s.f1 = EmpiricalMarginal(y1);
  s.f2 = EmpiricalMarginal(y2);
  if (s.f1.degenerate() || s.f2.degenerate()) return s;

  const std::size_t n = y1.size();
  std::vector<double> z1(n), z2(n);
  for (std::size_t k = 0; k < n; ++k) {
    z1[k] = phi_inv(s.f1.cdf(y1[k]));
    z2[k] = phi_inv(s.f2.cdf(y2[k]));
  }
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    m1 += z1[k];
    m2 += z2[k];
  }
  m1 /= static_cast<double>(n);
  m2 /= static_cast<double>(n);
  double s11 = 0.0, s22 = 0.0, s12 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    s11 += (z1[k] - m1) * (z1[k] - m1);
    s22 += (z2[k] - m2) * (z2[k] - m2);
    s12 += (z1[k] - m1) * (z2[k] - m2);
  }
  double rho = s12 / std::sqrt(s11 * s22);
  if (!std::isfinite(rho)) rho = 0.0;
  // A 2 x 2 correlation is PSD iff |rho| <= 1; rounding can step just outside.
  if (std::abs(rho) > 1.0) {
    rho = std::copysign(1.0, rho);
    s.projected = true;
  }
  s.rho = rho;
  return s;
}

std::pair<double, double> GaussianCopulaSynthesizer::sample(Rng& rng) const {
  const double e1 = phi_inv(open_uniform(rng));
  const double e2 = phi_inv(open_uniform(rng));
  const double z1 = e1;
  const double z2 = rho * e1 + std::sqrt(std::max(0.0, 1.0 - rho * rho)) * e2;
  auto to_unit = [](double z) { return std::clamp(phi(z), 1e-300, 1.0 - 1e-16); };
  return {f1.quantile(to_unit(z1)), f2.quantile(to_unit(z2))};
}

PortfolioDataset copula_synthesize(const std::vector<DevYearTable>& tables, const PortfolioDataset& like, Rng& rng,
                                   const SynthesisOptions& options) {
  const int origins = like.origins();
  if (like.empty()) throw DomainError("copula_synthesize: no companies");
  if (static_cast<int>(tables.size()) != origins)
    throw DomainError("copula_synthesize: expected one table per development year");

  std::vector<CellMap> cells1(like.size()), cells2(like.size());
  for (int j = 1; j <= origins; ++j) {
    const auto& table = tables[static_cast<std::size_t>(j - 1)];
    if (table.development != j) throw DomainError("copula_synthesize: tables out of order");
    auto synth = GaussianCopulaSynthesizer::fit(table.y1, table.y2);
    if (options.identity_correlation) synth.rho = 0.0;
    for (std::size_t c = 0; c < like.size(); ++c) {
      const auto& pair = like[c];
      // I rows per company; rows off the upper triangle are drawn then discarded.
      for (int i = 1; i <= origins; ++i) {
        const auto [y1, y2] = synth.sample(rng);
        if (!in_upper(origins, i, j)) continue;
        cells1[c][{i, j}] = y1 * pair.lob1.premium(i);
        cells2[c][{i, j}] = y2 * pair.lob2.premium(i);
      }
    }
  }

  std::vector<TrianglePair> pairs;
  for (std::size_t c = 0; c < like.size(); ++c) {
    const auto& pair = like[c];
    const auto p1 = pair.lob1.premiums();
    const auto p2 = pair.lob2.premiums();
    pairs.push_back({LossTriangle(pair.company(), Lob::kLob1, {p1.begin(), p1.end()}, cells1[c],
                                  pair.lob1.origin_labels()),
                     LossTriangle(pair.company(), Lob::kLob2, {p2.begin(), p2.end()}, cells2[c],
                                  pair.lob2.origin_labels())});
  }
  return PortfolioDataset(std::move(pairs));
}

namespace {

std::vector<dt::SequenceSample> gather(const std::map<dt::Anchor, std::vector<const dt::SequenceSample*>>& by_anchor,
                                       const std::vector<dt::Anchor>& drawn) {
  std::vector<dt::SequenceSample> out;
  for (const auto& a : drawn)
    for (const auto* s : by_anchor.at(a)) out.push_back(*s);
  return out;
}

std::vector<dt::Anchor> draw(const std::vector<dt::Anchor>& from, Rng& rng) {
  std::vector<dt::Anchor> out(from.size());
  for (auto& a : out) a = from[static_cast<std::size_t>(rng() % from.size())];
  return out;
}

}  // namespace

ResampledCorpus block_resample(const dt::Corpus& corpus, Rng& rng) {
  if (corpus.split.train.empty() || corpus.split.validation.empty())
    throw DomainError("block_resample: empty side of the anchor split");
  std::map<dt::Anchor, std::vector<const dt::SequenceSample*>> by_anchor;
  for (const auto& s : corpus.train) by_anchor[s.anchor].push_back(&s);
  for (const auto& s : corpus.validation) by_anchor[s.anchor].push_back(&s);

  ResampledCorpus out;
  out.train_anchors = draw(corpus.split.train, rng);
  out.validation_anchors = draw(corpus.split.validation, rng);
  out.train = gather(by_anchor, out.train_anchors);
  out.validation = gather(by_anchor, out.validation_anchors);
  return out;
}

std::vector<ResampledCorpus> block_bootstrap(const dt::Corpus& corpus, int replications, std::uint64_t seed) {
  if (replications < 1) throw DomainError("block_bootstrap: need at least one replication");
  std::vector<ResampledCorpus> out;
  out.reserve(static_cast<std::size_t>(replications));
  for (int k = 0; k < replications; ++k) {
    Rng rng = stream_rng(seed, static_cast<std::uint64_t>(k));
    out.push_back(block_resample(corpus, rng));
  }
  return out;
}

std::string_view to_string(EdtGenerator generator) {
  return generator == EdtGenerator::kCopulaSynth ? "copula_synth" : "block_bootstrap";
}

EdtGenerator parse_edt_generator(std::string_view text) {
  if (text == "copula_synth") return EdtGenerator::kCopulaSynth;
  if (text == "block_bootstrap") return EdtGenerator::kBlockBootstrap;
  throw DomainError("unknown EDT generator '" + std::string(text) + "'");
}

namespace {

dt::TrainResult train_replication(const dt::DtModel& model, const std::vector<std::string>& companies,
                                  const std::vector<dt::SequenceSample>& train_set,
                                  const std::vector<dt::SequenceSample>& validation_set, const dt::TrainConfig& config,
                                  bool warm_start) {
  if (warm_start) return dt::fine_tune(model, train_set, validation_set, config);
  Rng rng = stream_rng(config.seed, 0x696e6974ULL);
  auto fresh = dt::init_model(model.arch, companies, rng);
  fresh.normalization = dt::Normalization::from_samples(train_set);
  auto t = train_set;
  auto v = validation_set;
  dt::assign_companies(t, fresh);
  dt::assign_companies(v, fresh);
  return dt::train(std::move(fresh), t, v, config);
}

}  // namespace

EdtResult edt_predictive_distribution(const dt::DtModel& model, const PortfolioDataset& data, const EdtConfig& config,
                                      const ParallelOptions& parallel) {
  if (config.replications < 1) throw DomainError("edt_predictive_distribution: B must be at least 1");
  if (data.empty()) throw DomainError("edt_predictive_distribution: empty portfolio");
  config.training.validate();
  const auto upper = data.upper();
  const int history = config.training.history;
  std::vector<std::string> companies;
  for (const auto& pair : upper) companies.push_back(pair.company());

  // Generator inputs shared by every replication.
  std::vector<DevYearTable> tables;
  dt::Corpus corpus;
  if (config.generator == EdtGenerator::kCopulaSynth) {
    std::vector<TrianglePair> squares;
    for (auto& r : dt::predict_reserves(model, upper, history)) squares.push_back(std::move(r.completed));
    tables = dev_year_tables(squares);
  } else {
    corpus = dt::build_corpus(upper, config.training);
  }

  const auto count = static_cast<std::size_t>(config.replications);
  std::vector<std::vector<std::optional<Reserves>>> slots(companies.size(),
                                                          std::vector<std::optional<Reserves>>(count));
  for_each_index(config.replications, parallel, [&](int k) {
    const auto kk = static_cast<std::size_t>(k);
    try {
      Rng rng = stream_rng(config.seed, static_cast<std::uint64_t>(k));
      auto training = config.training;
      training.seed = rng();
      std::vector<dt::SequenceSample> train_set, validation_set;
      // Synthetic triangles are both the new corpus and the portfolio whose
      // reserves are predicted; the bootstrap predicts the original triangles.
      PortfolioDataset target = upper;
      if (config.generator == EdtGenerator::kCopulaSynth) {
        target = copula_synthesize(tables, upper, rng);
        auto c = dt::build_corpus(target, training);
        train_set = std::move(c.train);
        validation_set = std::move(c.validation);
      } else {
        auto r = block_resample(corpus, rng);
        train_set = std::move(r.train);
        validation_set = std::move(r.validation);
      }
      const auto fitted = train_replication(model, companies, train_set, validation_set, training, config.warm_start);
      const auto reserves = dt::predict_reserves(fitted.model, target, history);
      for (std::size_t c = 0; c < reserves.size(); ++c) {
        const auto& r = reserves[c].reserves;
        if (!std::isfinite(r.lob1) || !std::isfinite(r.lob2)) throw NumericError("non-finite reserve");
      }
      for (std::size_t c = 0; c < reserves.size(); ++c) slots[c][kk] = reserves[c].reserves;
    } catch (const std::exception&) {
      for (auto& s : slots) s[kk].reset();
    }
  });

  EdtResult result;
  const std::string tag(to_string(config.generator));
  for (std::size_t c = 0; c < companies.size(); ++c) {
    auto dist = collect_replications(tag, config.seed, slots[c]);
    dist.company = companies[c];
    result.companies.push_back(std::move(dist));
  }
  result.failures = result.companies.front().failures;
  if (config.generator == EdtGenerator::kCopulaSynth)
    for (const auto& t : tables)
      if (GaussianCopulaSynthesizer::fit(t.y1, t.y2).projected) ++result.projected_tables;
  return result;
}

}  // namespace lossres::resample
