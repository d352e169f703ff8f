#include "cli.hpp"

#include <openssl/evp.h>
#include <openssl/opensslv.h>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <array>
#include <boost/version.hpp>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "lossres/copula/regression.hpp"
#include "lossres/dt/train.hpp"
#include "lossres/error.hpp"
#include "lossres/parallel.hpp"
#include "lossres/resample/copula_resample.hpp"
#include "lossres/resample/edt.hpp"
#include "lossres/risk/metrics.hpp"
#include "lossres/sim/generate.hpp"
#include "lossres/sim/study.hpp"
#include "lossres/triangle_io.hpp"

#ifndef LOSSRES_VERSION
#define LOSSRES_VERSION "0.0.0"
#endif

namespace lossres::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw NumericError("sha256: digest initialization failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int k = 0; k < len; ++k) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[k]};
  return hex.str();
}

namespace {

/// Files and settings one command produced, recorded in the run manifest.
struct RunRecord {
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;  ///< relative to the run directory
  json config = json::object();
  std::optional<std::uint64_t> seed;
};

struct Context {
  fs::path out;
  ParallelOptions parallel;
  RunRecord record;

  std::ofstream create(const std::string& name) {
    record.outputs.emplace_back(name);
    std::ofstream f(out / name, std::ios::binary);
    if (!f) throw DataError("cannot write " + (out / name).string());
    return f;
  }
  void add_output(const std::string& name) { record.outputs.emplace_back(name); }
  void add_input(const fs::path& p) { record.inputs.push_back(fs::absolute(p).lexically_normal()); }
};

json versions() {
  return {{"lossres", LOSSRES_VERSION},
          {"compiler", __VERSION__},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", BOOST_LIB_VERSION},
          {"openssl", OPENSSL_VERSION_TEXT},
          {"cli11", CLI11_VERSION}};
}

struct DataArgs {
  std::string data;
  std::string premiums;

  void add(CLI::App* app, bool required = true) {
    auto* o = app->add_option("--data", data, "Triangle CSV (wide schema, or long with --premiums)");
    if (required) o->required();
    o->check(CLI::ExistingFile);
    app->add_option("--premiums", premiums, "Premium CSV for the long schema")->check(CLI::ExistingFile);
  }
  PortfolioDataset load(Context& ctx) const {
    ctx.add_input(data);
    if (premiums.empty()) return parse_triangle_csv(data, CsvSchema::kWide);
    ctx.add_input(premiums);
    return parse_triangle_csv(data, CsvSchema::kLong, fs::path(premiums));
  }
};

const CLI::IsMember kCopulaNames({"product", "gaussian", "frank", "student_t", "t"});

const TrianglePair& pick_company(const PortfolioDataset& data, const std::string& company) {
  if (company.empty()) return data[0];
  return data.at(company);
}

std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw DomainError("invalid level '" + item + "'");
    }
    if (used != item.size()) throw DomainError("invalid level '" + item + "'");
    if (v > 1.0) v /= 100.0;  // percentages
    if (!(v > 0.0 && v < 1.0)) throw DomainError("level '" + item + "' outside (0, 1) or (0, 100)");
    out.push_back(v);
  }
  if (out.empty()) throw DomainError("no levels given");
  return out;
}

std::vector<int> parse_ints(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      throw DomainError("invalid integer '" + item + "'");
    }
    if (used != item.size()) throw DomainError("invalid integer '" + item + "'");
    out.push_back(v);
  }
  return out;
}

void write_reserves_csv(std::ofstream& out, const std::vector<std::pair<std::string, Reserves>>& rows) {
  out << "company,R1,R2,R\n";
  for (const auto& [company, r] : rows)
    out << company << ',' << format_double(r.lob1) << ',' << format_double(r.lob2) << ',' << format_double(r.total)
        << '\n';
}

void write_distribution_to(Context& ctx, const resample::ReserveDistribution& dist, const std::string& stem) {
  resample::write_distribution(dist, ctx.out / (stem + ".csv"));
  ctx.add_output(stem + ".csv");
  ctx.add_output(stem + ".json");
}

json summary_json(const resample::ReserveDistribution& dist, double point, const std::vector<double>& levels) {
  json j = dist.metadata();
  if (dist.draws.size() >= 2) j["summary"] = risk::to_json(risk::summarize(dist.total(), point, levels));
  return j;
}

// Training flags shared by the subcommands that train a DT.
struct TrainArgs {
  std::string loss;
  int hidden = 0;
  int epochs = 0;
  int patience = 0;
  double lr = 0.0;
  int batch = 0;
  double split = 0.0;
  int history = -1;

  void add(CLI::App* app) {
    app->add_option("--loss", loss, "symmetric or asymmetric")->check(CLI::IsMember({"symmetric", "asymmetric"}));
    app->add_option("--hidden", hidden, "GRU width");
    app->add_option("--epochs", epochs, "maximum epochs");
    app->add_option("--patience", patience, "early-stopping patience");
    app->add_option("--lr", lr, "learning rate");
    app->add_option("--batch", batch, "minibatch size");
    app->add_option("--split", split, "training share of the anchors");
    app->add_option("--history", history, "input-length cap, 0 for none");
  }
  void apply(dt::TrainConfig& c) const {
    if (!loss.empty()) c.loss = dt::parse_loss_kind(loss);
    if (hidden > 0) c.hidden = hidden;
    if (epochs > 0) c.max_epochs = epochs;
    if (patience > 0) c.patience = patience;
    if (lr > 0.0) c.learning_rate = lr;
    if (batch > 0) c.batch_size = batch;
    if (split > 0.0) c.split = split;
    if (history >= 0) c.history = history;
    c.validate();
  }
};

// fit-copula

struct FitCopulaCmd {
  DataArgs data;
  std::string copula = "product";
  std::string lob1 = "lognormal";
  std::string lob2 = "gamma";
  std::string company;
  std::string transform = "standard";
  bool company_effects = false;
  double level = 0.95;

  void add(CLI::App* app) {
    data.add(app);
    app->add_option("--copula", copula, "product, gaussian, frank or student_t")->check(kCopulaNames);
    app->add_option("--lob1", lob1, "LOB1 marginal family");
    app->add_option("--lob2", lob2, "LOB2 marginal family");
    app->add_option("--company", company, "fit only this company");
    app->add_option("--transform", transform, "standard or alternative dependence transform")
        ->check(CLI::IsMember({"standard", "alternative"}));
    app->add_flag("--company-effects", company_effects, "pool all companies with a company effect");
    app->add_option("--level", level, "interval level");
  }

  void run(Context& ctx) const {
    const auto portfolio = data.load(ctx);
    copula::FitOptions options;
    options.copula = copula::parse_copula_family(copula);
    options.lob1_family = copula::parse_marginal_family(lob1);
    options.lob2_family = copula::parse_marginal_family(lob2);
    options.company_effects = company_effects;
    if (transform == "alternative") options.transform = copula::ThetaTransform::kAlternative;
    else if (transform != "standard") throw DomainError("unknown transform '" + transform + "'");

    PortfolioDataset subject = portfolio;
    if (!company_effects) subject = PortfolioDataset({pick_company(portfolio, company)});
    const auto fit = copula::fit(subject, options);
    json report = copula::fit_report(fit, level);
    std::vector<std::pair<std::string, Reserves>> rows;
    for (const auto& pair : subject) rows.emplace_back(pair.company(), copula::fitted_reserves(fit, pair));
    json reserves = json::array();
    for (const auto& [c, r] : rows) reserves.push_back({{"company", c}, {"R1", r.lob1}, {"R2", r.lob2}, {"R", r.total}});
    report["reserves"] = reserves;
    if (subject.size() == 1) report["residual_kendall_tau"] = copula::residual_kendall_tau(fit, subject[0]);
    ctx.create("fit.json") << report.dump(2) << '\n';
    auto csv = ctx.create("reserves.csv");
    write_reserves_csv(csv, rows);
    ctx.record.config = {{"copula", copula}, {"lob1", lob1}, {"lob2", lob2}, {"company", company},
                         {"company_effects", company_effects}, {"transform", transform}, {"level", level}};
    std::cout << copula::to_string(fit.copula.family) << ": loglik " << format_double(fit.log_likelihood)
              << (fit.convergence.converged ? "" : " (not converged)") << '\n';
  }
};

// fit-dt

struct FitDtCmd {
  DataArgs data;
  std::uint64_t seed = 0;
  TrainArgs train;

  void add(CLI::App* app) {
    data.add(app);
    app->add_option("--seed", seed, "training seed")->required();
    train.add(app);
  }

  void run(Context& ctx) const {
    const auto portfolio = data.load(ctx).upper();
    dt::TrainConfig config;
    config.seed = seed;
    train.apply(config);
    const auto result = dt::fit_dt(portfolio, config);
    dt::save_checkpoint(result.model, ctx.out / "model.json",
                        {{"config", dt::to_json(config)},
                         {"best_epoch", result.best_epoch},
                         {"best_validation_loss", result.best_validation_loss}});
    ctx.add_output("model.json");
    {
      auto h = ctx.create("history.csv");
      h << "epoch,train_loss,validation_loss\n";
      for (const auto& e : result.history)
        h << e.epoch << ',' << (std::isnan(e.train_loss) ? "" : format_double(e.train_loss)) << ','
          << format_double(e.validation_loss) << '\n';
    }
    std::vector<std::pair<std::string, Reserves>> rows;
    for (const auto& r : dt::predict_reserves(result.model, portfolio, config.history)) rows.emplace_back(r.company, r.reserves);
    auto csv = ctx.create("reserves.csv");
    write_reserves_csv(csv, rows);
    ctx.record.seed = seed;
    ctx.record.config = dt::to_json(config);
    std::cout << "best epoch " << result.best_epoch << ", validation loss " << format_double(result.best_validation_loss)
              << '\n';
  }
};

// bootstrap

struct BootstrapCmd {
  DataArgs data;
  std::string copula = "product";
  std::string company;
  std::string method = "parametric";
  int replications = 1000;
  std::uint64_t seed = 0;
  std::string levels = "60,80,85,90,95,99";

  void add(CLI::App* app) {
    data.add(app);
    app->add_option("--copula", copula, "copula family")->check(kCopulaNames);
    app->add_option("--company", company, "company to resample, default the first");
    app->add_option("--method", method, "parametric or mc")->check(CLI::IsMember({"parametric", "mc"}));
    app->add_option("-B,--replications", replications, "replications");
    app->add_option("--seed", seed, "base seed")->required();
    app->add_option("--levels", levels, "summary TVaR levels");
  }

  void run(Context& ctx) const {
    const auto portfolio = data.load(ctx);
    const auto& pair = pick_company(portfolio, company);
    copula::FitOptions options;
    options.copula = copula::parse_copula_family(copula);
    const auto fit = copula::fit(pair, options);
    if (!fit.convergence.converged) throw NumericError("copula fit did not converge: " + fit.convergence.message);
    resample::ReserveDistribution dist;
    if (method == "parametric") dist = resample::parametric_bootstrap(fit, pair, replications, seed, ctx.parallel);
    else if (method == "mc") dist = resample::mc_simulate(fit, pair, replications, seed, ctx.parallel);
    else throw DomainError("unknown method '" + method + "'");
    dist.company = pair.company();
    write_distribution_to(ctx, dist, "distribution");
    const auto point = copula::fitted_reserves(fit, pair);
    ctx.create("summary.json") << summary_json(dist, point.total, parse_levels(levels)).dump(2) << '\n';
    ctx.record.seed = seed;
    ctx.record.config = {{"copula", copula}, {"company", pair.company()}, {"method", method},
                         {"replications", replications}, {"levels", levels}};
    std::cout << dist.draws.size() << " draws, " << dist.failures << " failures\n";
  }
};

// synth

struct SynthCmd {
  DataArgs data;
  std::string model;
  std::string generator = "copula_synth";
  int replications = 1000;
  std::uint64_t seed = 0;
  bool cold = false;
  bool emit_triangles = false;
  TrainArgs train;
  std::string levels = "60,80,85,90,95,99";

  void add(CLI::App* app) {
    data.add(app);
    app->add_option("--model", model, "DT checkpoint")->required()->check(CLI::ExistingFile);
    app->add_option("--generator", generator, "copula_synth or block_bootstrap")
        ->check(CLI::IsMember({"copula_synth", "block_bootstrap"}));
    app->add_option("-B,--replications", replications, "replications");
    app->add_option("--seed", seed, "base seed")->required();
    app->add_flag("--cold", cold, "train each replication from scratch");
    app->add_flag("--emit-triangles", emit_triangles, "also write one synthetic portfolio");
    app->add_option("--levels", levels, "summary TVaR levels");
    train.add(app);
  }

  void run(Context& ctx) const {
    const auto portfolio = data.load(ctx).upper();
    ctx.add_input(model);
    const auto dt_model = dt::load_checkpoint(model);
    resample::EdtConfig config;
    config.generator = resample::parse_edt_generator(generator);
    config.replications = replications;
    config.seed = seed;
    config.warm_start = !cold;
    std::ifstream meta_in(model);
    const auto meta = json::parse(meta_in);
    if (meta.contains("metadata") && meta["metadata"].contains("config"))
      config.training = dt::train_config_from_json(meta["metadata"]["config"]);
    config.training.hidden = dt_model.arch.hidden;
    config.training.max_epochs = 100;
    config.training.patience = 10;
    train.apply(config.training);

    const auto result = resample::edt_predictive_distribution(dt_model, portfolio, config, ctx.parallel);
    const auto points = dt::predict_reserves(dt_model, portfolio, config.training.history);
    const auto lv = parse_levels(levels);
    json summary = json::array();
    for (std::size_t c = 0; c < result.companies.size(); ++c) {
      const auto& dist = result.companies[c];
      const std::string stem = "distribution_" + dist.company;
      write_distribution_to(ctx, dist, stem);
      summary.push_back(summary_json(dist, points[c].reserves.total, lv));
    }
    ctx.create("summary.json") << json{{"companies", summary}, {"failures", result.failures},
                                        {"projected_tables", result.projected_tables}}
                                      .dump(2)
                               << '\n';
    if (emit_triangles && config.generator == resample::EdtGenerator::kCopulaSynth) {
      std::vector<TrianglePair> squares;
      for (const auto& r : points) squares.push_back(r.completed);
      Rng rng = stream_rng(seed, 0x7472696eULL);
      const auto synthetic = resample::copula_synthesize(resample::dev_year_tables(squares), portfolio, rng);
      write_triangle_csv(synthetic, ctx.out / "synthetic_values.csv", ctx.out / "synthetic_premiums.csv");
      ctx.add_output("synthetic_values.csv");
      ctx.add_output("synthetic_premiums.csv");
    }
    ctx.record.seed = seed;
    ctx.record.config = {{"generator", generator}, {"replications", replications}, {"warm_start", !cold},
                         {"training", dt::to_json(config.training)}, {"levels", levels}};
    std::cout << result.companies.size() << " companies, " << result.failures << " failed replications\n";
  }
};

// risk

struct RiskCmd {
  std::string dist;
  std::string levels = "80,85,90,95,99";
  double point = std::numeric_limits<double>::quiet_NaN();

  void add(CLI::App* app) {
    app->add_option("--dist", dist, "distribution CSV (replication,R1,R2,R)")->required()->check(CLI::ExistingFile);
    app->add_option("--levels", levels, "comma-separated levels, percent or fraction");
    app->add_option("--point", point, "point reserve for the bias column");
  }

  void run(Context& ctx) const {
    ctx.add_input(dist);
    const auto d = resample::read_distribution(dist);
    const auto lv = parse_levels(levels);
    const auto total = d.total();
    const auto r1 = d.lob1();
    const auto r2 = d.lob2();
    if (total.empty()) throw DomainError("distribution has no draws");
    auto csv = ctx.create("risk.csv");
    csv << "level,var,tvar,risk_capital,silo_risk_capital,gain\n";
    for (double k : lv) {
      csv << format_double(k) << ',' << format_double(risk::var(total, k)) << ',' << format_double(risk::tvar(total, k))
          << ',';
      if (k >= 0.6) {
        const double rc = risk::risk_capital(total, k);
        const double silo = risk::silo(r1, r2, k);
        csv << format_double(rc) << ',' << format_double(silo) << ','
            << (silo > 0.0 ? format_double(risk::gain(silo, rc)) : "");
      } else {
        csv << ",,";
      }
      csv << '\n';
    }
    if (total.size() >= 2) {
      const double p = std::isnan(point) ? 0.0 : point;
      ctx.create("risk.json") << risk::to_json(risk::summarize(total, p, lv)).dump(2) << '\n';
    }
    ctx.record.config = {{"levels", levels}, {"point", std::isnan(point) ? json(nullptr) : json(point)}};
  }
};

// simulate

struct SimulateCmd {
  std::uint64_t seed = 0;
  int pairs = 10;
  int replications = 200;
  bool full = false;
  bool cold = false;
  std::string config_path;
  std::string params_path;

  void add(CLI::App* app) {
    app->add_option("--seed", seed, "simulation seed")->required();
    app->add_option("--pairs", pairs, "triangle pairs");
    app->add_option("-B,--replications", replications, "replications per predictive distribution");
    app->add_flag("--full", full, "50 pairs and 1000 replications");
    app->add_flag("--cold", cold, "EDT replications train from scratch");
    app->add_option("--config", config_path, "study configuration JSON")->check(CLI::ExistingFile);
    app->add_option("--params", params_path, "simulation parameter JSON")->check(CLI::ExistingFile);
  }

  void run(Context& ctx) const {
    sim::StudyConfig config;
    if (!config_path.empty()) {
      ctx.add_input(config_path);
      std::ifstream in(config_path);
      config = sim::study_config_from_json(json::parse(in));
    }
    config.pairs = full ? 50 : pairs;
    config.replications = full ? 1000 : replications;
    config.seed = seed;
    if (cold) config.warm_start = false;
    config.validate();
    sim::SimParams params = sim::study_params();
    if (!params_path.empty()) {
      ctx.add_input(params_path);
      std::ifstream in(params_path);
      params = sim::sim_params_from_json(json::parse(in));
    }
    const auto report = sim::run_study(params, config, ctx.parallel);
    for (const auto& f : sim::write_study(report, ctx.out)) ctx.add_output(f.filename().string());
    write_triangle_csv(sim::generate_portfolio(params, config.pairs, config.seed), ctx.out / "squares_values.csv",
                       ctx.out / "squares_premiums.csv");
    ctx.add_output("squares_values.csv");
    ctx.add_output("squares_premiums.csv");
    ctx.record.seed = seed;
    ctx.record.config = {{"study", sim::to_json(config)}, {"params", sim::to_json(params)}};
    for (const auto& c : sim::study_orderings(report))
      std::cout << (c.passed ? "holds  " : "fails  ") << c.name << ": " << c.detail << '\n';
  }
};

// sweep

struct SweepCmd {
  DataArgs data;
  std::uint64_t seed = 0;
  int pairs = 10;
  int folds = 5;
  std::string lengths;
  TrainArgs train;

  void add(CLI::App* app) {
    data.add(app, false);
    app->add_option("--seed", seed, "data and training seed")->required();
    app->add_option("--pairs", pairs, "simulated pairs when no --data is given");
    app->add_option("--folds", folds, "cross-validation folds, 1 for a single hold-out");
    app->add_option("--lengths", lengths, "comma-separated input lengths, default 1..I-1");
    train.add(app);
  }

  void run(Context& ctx) const {
    PortfolioDataset portfolio =
        data.data.empty() ? sim::generate_portfolio(sim::study_params(), pairs, seed) : data.load(ctx);
    sim::SweepConfig config;
    config.training = sim::StudyConfig::default_dt();
    config.training.seed = seed;
    train.apply(config.training);
    config.folds = folds;
    if (!lengths.empty()) config.lengths = parse_ints(lengths);
    const auto result = sim::sequence_length_sweep(portfolio, config, ctx.parallel);
    ctx.create("sweep.json") << sim::to_json(result).dump(2) << '\n';
    sim::write_sweep_csv(result, ctx.out / "sweep.csv");
    ctx.add_output("sweep.csv");
    ctx.record.seed = seed;
    ctx.record.config = {{"pairs", pairs}, {"folds", folds}, {"lengths", lengths},
                         {"training", dt::to_json(config.training)}, {"simulated", data.data.empty()}};
    std::cout << "best length " << result.best_length << '\n';
  }
};

// report

struct ReportCmd {
  std::string run_dir;

  void add(CLI::App* app) {
    app->add_option("--run", run_dir, "run directory holding manifest.json")->required()->check(CLI::ExistingDirectory);
  }

  void run(Context& ctx) const {
    const fs::path dir(run_dir);
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) throw DataError("no manifest.json in " + dir.string());
    ctx.add_input(manifest_path);
    std::ifstream in(manifest_path);
    const auto manifest = json::parse(in);
    std::ostringstream md;
    const std::string command = manifest.value("command", "");
    md << "# Run report: " << command << "\n\n";
    if (manifest.contains("seed") && !manifest["seed"].is_null()) md << "Seed: " << manifest["seed"].dump() << "\n\n";
    md << "## Outputs\n\n| file | sha256 |\n|---|---|\n";
    for (const auto& o : manifest.at("outputs"))
      md << "| " << o.at("file").get<std::string>() << " | " << o.at("sha256").get<std::string>().substr(0, 16)
         << " |\n";
    md << '\n';

    auto read_json = [&](const std::string& name) {
      ctx.add_input(dir / name);
      std::ifstream f(dir / name);
      return json::parse(f);
    };
    if (command == "simulate") {
      const auto r = read_json("report.json");
      md << "## Point estimates (MAPE)\n\n| model | LOB1 | LOB2 |\n|---|---|---|\n";
      for (const auto& p : r.at("point_estimates"))
        md << "| " << p.at("model").get<std::string>() << " | " << p.at("mape_lob1").dump() << " | "
           << p.at("mape_lob2").dump() << " |\n";
      md << "\n## Predictive distributions\n\n| pipeline | mean CV | coverage | mean CI width |\n|---|---|---|---|\n";
      for (const auto& p : r.at("pipelines"))
        md << "| " << p.at("name").get<std::string>() << " | " << p.at("mean_cv").dump() << " | "
           << p.at("coverage").dump() << " | " << p.at("mean_ci_width").dump() << " |\n";
      md << "\n## Orderings\n\n";
      for (const auto& c : r.at("orderings"))
        md << "- " << c.at("name").get<std::string>() << ": " << (c.at("passed").get<bool>() ? "holds" : "fails")
           << " (" << c.at("detail").get<std::string>() << ")\n";
    } else if (command == "fit-copula") {
      const auto r = read_json("fit.json");
      md << "## Fit\n\n```json\n" << r.dump(2) << "\n```\n";
    } else if (command == "sweep") {
      const auto r = read_json("sweep.json");
      md << "## Sweep\n\n| length | validation loss |\n|---|---|\n";
      for (const auto& p : r.at("points"))
        md << "| " << p.at("length").get<int>() << " | " << p.at("validation_loss").dump() << " |\n";
      md << "\nBest length: " << r.at("best_length").get<int>() << '\n';
    } else if (command == "bootstrap" || command == "synth") {
      const auto r = read_json("summary.json");
      md << "## Summary\n\n```json\n" << r.dump(2) << "\n```\n";
    }
    ctx.create("report.md") << md.str();
    ctx.record.config = {{"run", fs::absolute(dir).lexically_normal().string()}};
  }
};

void write_manifest(const Context& ctx, const std::string& command, const std::vector<std::string>& args) {
  json inputs = json::array();
  for (const auto& p : ctx.record.inputs) inputs.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  json outputs = json::array();
  for (const auto& p : ctx.record.outputs)
    outputs.push_back({{"file", p.generic_string()}, {"sha256", sha256_file(ctx.out / p)}});
  json manifest = {{"tool", "lossres"},
                   {"command", command},
                   {"args", args},
                   {"seed", ctx.record.seed ? json(*ctx.record.seed) : json(nullptr)},
                   {"config", ctx.record.config},
                   {"inputs", inputs},
                   {"outputs", outputs},
                   {"versions", versions()}};
  std::ofstream f(ctx.out / "manifest.json", std::ios::binary);
  if (!f) throw DataError("cannot write manifest");
  f << manifest.dump(2) << '\n';
}

// Replay runs the recorded command into a new directory and compares hashes.
int replay(const fs::path& manifest_path, const fs::path& out, int workers) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open " + manifest_path.string());
  const auto manifest = json::parse(in);
  for (const auto& i : manifest.at("inputs")) {
    const fs::path p = i.at("path").get<std::string>();
    if (!fs::exists(p)) throw DataError("replay: input " + p.string() + " is missing");
    if (sha256_file(p) != i.at("sha256").get<std::string>())
      throw DataError("replay: input " + p.string() + " changed since the recorded run");
  }
  std::vector<std::string> args{manifest.at("command").get<std::string>()};
  for (const auto& a : manifest.at("args")) args.push_back(a.get<std::string>());
  args.push_back("--out");
  args.push_back(out.string());
  if (workers > 0) {
    args.push_back("--workers");
    args.push_back(std::to_string(workers));
  }
  const int code = run(args);
  if (code != 0) return code;

  int mismatches = 0;
  for (const auto& o : manifest.at("outputs")) {
    const auto file = o.at("file").get<std::string>();
    if (!fs::exists(out / file) || sha256_file(out / file) != o.at("sha256").get<std::string>()) {
      std::cerr << "replay: " << file << " differs from the recorded run\n";
      ++mismatches;
    }
  }
  if (mismatches > 0) return 1;
  std::cout << "replay: " << manifest.at("outputs").size() << " outputs byte-identical\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Joint two-line loss reserving: copula regression, deep triangle, predictive distributions"};
  app.require_subcommand(1);
  std::string out;
  int workers = default_workers();
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", out, "run directory")->required();
    sub->add_option("--workers", workers, "parallel workers, 0 for the OpenMP default")->check(CLI::NonNegativeNumber);
  };

  FitCopulaCmd fit_copula;
  FitDtCmd fit_dt;
  BootstrapCmd bootstrap;
  SynthCmd synth;
  RiskCmd risk_cmd;
  SimulateCmd simulate;
  SweepCmd sweep;
  ReportCmd report;
  std::string manifest;

  std::vector<std::pair<CLI::App*, std::function<void(Context&)>>> commands;
  auto reg = [&](const char* name, const char* help, auto& cmd) {
    auto* sub = app.add_subcommand(name, help);
    cmd.add(sub);
    add_common(sub);
    commands.emplace_back(sub, [&cmd](Context& ctx) { cmd.run(ctx); });
  };
  reg("fit-copula", "fit a copula regression", fit_copula);
  reg("fit-dt", "train the deep triangle model", fit_dt);
  reg("bootstrap", "copula predictive distribution (parametric bootstrap or Monte Carlo)", bootstrap);
  reg("synth", "EDT predictive distributions from a trained model", synth);
  reg("risk", "VaR, TVaR and risk-capital ladder of a distribution", risk_cmd);
  reg("simulate", "simulation study", simulate);
  reg("sweep", "input-length sweep", sweep);
  reg("report", "markdown summary of a run directory", report);
  auto* replay_cmd = app.add_subcommand("replay", "rerun a manifest and check outputs are byte-identical");
  replay_cmd->add_option("--manifest", manifest, "manifest.json of the recorded run")->required()->check(CLI::ExistingFile);
  add_common(replay_cmd);

  std::vector<const char*> argv{"lossres"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const fs::path out_dir(out);
    fs::create_directories(out_dir);
    if (replay_cmd->parsed()) return replay(manifest, out_dir, workers);
    for (auto& [sub, body] : commands) {
      if (!sub->parsed()) continue;
      Context ctx;
      ctx.out = out_dir;
      ctx.parallel = {Execution::kParallel, workers};
      body(ctx);
      // Arguments as given minus run-location and scheduling flags, which do not affect outputs.
      std::vector<std::string> recorded;
      for (std::size_t k = 1; k < args.size(); ++k) {
        if (args[k] == "--out" || args[k] == "--workers") {
          ++k;
          continue;
        }
        if (args[k].starts_with("--out=") || args[k].starts_with("--workers=")) continue;
        recorded.push_back(args[k]);
      }
      // Input paths are made absolute so a replay works from any directory.
      for (std::size_t k = 0; k + 1 < recorded.size(); ++k) {
        static const std::array<const char*, 7> path_flags{"--data", "--premiums", "--model", "--dist",
                                                           "--config", "--params", "--run"};
        for (const char* f : path_flags)
          if (recorded[k] == f) recorded[k + 1] = fs::absolute(recorded[k + 1]).lexically_normal().string();
      }
      write_manifest(ctx, sub->get_name(), recorded);
      return 0;
    }
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace lossres::cli
