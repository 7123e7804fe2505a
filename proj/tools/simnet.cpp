// simnet command-line driver.
//
//   simnet <command> --config configs/default.ini [--set key=value ...]
//
// Every command writes its outputs and a resolved copy of the configuration
// (resolved.ini) into run.output_dir.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "simnet/casestudy.hpp"
#include "simnet/checks.hpp"
#include "simnet/cmx.hpp"
#include "simnet/config.hpp"
#include "simnet/diodelab.hpp"
#include "simnet/errors.hpp"
#include "simnet/locapp.hpp"
#include "simnet/optim.hpp"
#include "simnet/scene.hpp"

namespace fs = std::filesystem;
using namespace simnet;

namespace {

// Fixed formatting so identical runs give identical bytes.
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10e", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

fs::path prepare_output(const config::RunConfig& cfg) {
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  open_out(dir / "resolved.ini") << config::to_text(cfg);
  return dir;
}

void write_history(const fs::path& path, const optim::OptimRun& run) {
  auto out = open_out(path);
  out << "iter,loss,beta_re,beta_im,grad_norm\n";
  for (std::size_t i = 0; i < run.loss.size(); ++i) {
    out << i << ',' << num(run.loss[i]) << ',' << num(run.beta[i].real()) << ',' << num(run.beta[i].imag()) << ','
        << num(run.grad_norm[i]) << '\n';
  }
}

void write_runs(const fs::path& path, const optim::OptimResult& result) {
  auto out = open_out(path);
  out << "start,iterations,best_loss,termination\n";
  for (const auto& r : result.runs) {
    out << r.start << ',' << r.loss.size() << ',' << num(r.best_loss) << ',' << optim::to_string(r.termination)
        << '\n';
  }
}

void write_phases(const fs::path& path, const Eigen::VectorXd& phases) {
  auto out = open_out(path);
  out << "cell,eta\n";
  for (Eigen::Index p = 0; p < phases.size(); ++p) out << p << ',' << num(phases(p)) << '\n';
}

std::string engine_name(optim::EngineKind kind) {
  return kind == optim::EngineKind::kLinear ? "linear" : "nonlinear";
}

void write_metrics_row(std::ostream& out, const std::string& engine, double snr_db,
                       const locapp::LocalizationMetrics& m) {
  out << engine << ',' << num(snr_db) << ',' << num(m.mean_error) << ',' << num(m.p50) << ',' << num(m.p90) << ','
      << num(m.tf_residual_pct) << '\n';
}

// Top view (x across, z away from the first layer) of true and estimated
// positions, each pair joined by a line.
void write_scatter_svg(const fs::path& path, const locapp::LocalizationMetrics& m, const scene::Region& region) {
  const double r = region.range_max;
  const double xmax = r * std::max(std::abs(std::sin(region.angle_min)), std::abs(std::sin(region.angle_max)));
  const double zmin = region.range_min * std::min(std::cos(region.angle_min), std::cos(region.angle_max));
  const double w = 600.0;
  const double h = 600.0 * (r - zmin) / (2.0 * xmax);
  auto px = [&](const locapp::Polar& p) { return (p.range * std::sin(p.angle) + xmax) / (2.0 * xmax) * w; };
  auto pz = [&](const locapp::Polar& p) { return (p.range * std::cos(p.angle) - zmin) / (r - zmin) * h; };
  auto out = open_out(path);
  char buf[256];
  std::snprintf(buf, sizeof(buf), "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\">\n", w + 20,
                h + 20);
  out << buf << "<g transform=\"translate(10,10)\">\n";
  for (std::size_t i = 0; i < m.truth.size(); ++i) {
    const auto& t = m.truth[i];
    const auto& e = m.estimates[i];
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#bbb\" stroke-width=\"0.7\"/>\n",
                  px(t), pz(t), px(e), pz(e));
    out << buf;
    std::snprintf(buf, sizeof(buf), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2.5\" fill=\"#1f77b4\"/>\n", px(t), pz(t));
    out << buf;
    std::snprintf(buf, sizeof(buf), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2.5\" fill=\"#d62728\"/>\n", px(e), pz(e));
    out << buf;
  }
  out << "</g>\n</svg>\n";
}

void write_channel_map(const fs::path& path, const std::vector<locapp::MapCell>& map) {
  auto out = open_out(path);
  out << "angle_deg,range_m,channel\n";
  for (const auto& c : map) {
    out << num(c.position.angle * 180.0 / std::numbers::pi) << ',' << num(c.position.range) << ',' << c.channel
        << '\n';
  }
}

void write_confusion(const fs::path& path, const Eigen::MatrixXi& confusion) {
  auto out = open_out(path);
  for (Eigen::Index i = 0; i < confusion.rows(); ++i) {
    for (Eigen::Index j = 0; j < confusion.cols(); ++j) out << (j ? "," : "") << confusion(i, j);
    out << '\n';
  }
}

int cmd_scene_dump(const config::RunConfig& cfg) {
  const fs::path dir = prepare_output(cfg);
  const auto sc = scene::build_scene(cfg.scene);
  netcore::write_cmx(dir / "s_rt.cmx", sc.s_rt);
  netcore::write_cmx(dir / "s_et.cmx", sc.s_et);
  netcore::write_cmx(dir / "s_re.cmx", sc.s_re);
  netcore::write_cmx(dir / "s_ee.cmx", sc.s_ee.to_dense());
  const auto& p = sc.partition;
  std::cout << "L=" << p.tx_ports << " M=" << p.rx_ports << " Q=" << p.stages << " K=" << p.ports_per_layer
            << " N=" << p.internal_ports() << '\n'
            << "max inter-stage block norm " << scene::check_passivity(sc.s_ee) << '\n'
            << "wrote " << dir.string() << "/s_{rt,et,re,ee}.cmx\n";
  return 0;
}

int cmd_fit_rapp(const config::RunConfig& cfg) {
  const fs::path dir = prepare_output(cfg);
  const auto& d = cfg.diode;
  const auto table = diodelab::am_am_curve(d.params, diodelab::log_grid(d.r_min, d.r_max, d.points),
                                           d.samples_per_period);
  const auto fit = diodelab::fit_rapp(table);
  {
    auto out = open_out(dir / "am_am.csv");
    out << "r,g\n";
    for (std::size_t i = 0; i < table.r.size(); ++i) out << num(table.r[i]) << ',' << num(table.g[i]) << '\n';
  }
  const double rel = fit.rms_error / fit.params.g0;
  const double compression = diodelab::compression_db(table);
  {
    auto out = open_out(dir / "rapp.ini");
    out << "[rapp]\n"
        << "g0 = " << num(fit.params.g0) << '\n'
        << "rs = " << num(fit.params.rs) << '\n'
        << "p = " << num(fit.params.p) << '\n'
        << "rms_error = " << num(fit.rms_error) << '\n'
        << "rms_rel_g0 = " << num(rel) << '\n'
        << "compression_db = " << num(compression) << '\n'
        << "rs_identifiable = " << (fit.rs_identifiable ? "true" : "false") << '\n';
  }
  std::printf("g0 %.6f  rs %.6g  p %.4f  rms %.3g (%.3f%% of g0)  compression %.2f dB\n", fit.params.g0,
              fit.params.rs, fit.params.p, fit.rms_error, 100.0 * rel, compression);
  const bool ok = rel <= 0.02;
  std::printf("fit %s (rms <= 2%% of g0)\n", ok ? "ok" : "FAILED");
  return ok ? 0 : 1;
}

int cmd_optimize(const config::RunConfig& cfg) {
  const fs::path dir = prepare_output(cfg);
  const auto sc = scene::build_scene(cfg.scene);
  const locapp::BinGrid grid(cfg.scene.region);
  const auto anchors = locapp::anchor_positions(grid, cfg.localize.anchors_per_axis);
  const double scale = locapp::drive_scale(sc, anchors, cfg.localize.drive_rms);
  const auto out = casestudy::run_engine(cfg, cfg.engine.kind, sc, grid, anchors, scale);
  const auto& best = out.optimization.best_run();
  write_history(dir / "history.csv", best);
  write_runs(dir / "runs.csv", out.optimization);
  write_phases(dir / "phases.csv", out.phases);
  std::printf("%s engine: best start %d, %zu iterations (%s), loss %.6g, tf residual %.3f%%  [%.1f s]\n",
              engine_name(out.kind).c_str(), best.start, best.loss.size(), optim::to_string(best.termination).c_str(),
              best.best_loss, out.tf_residual_pct, out.seconds);
  return 0;
}

int cmd_localize(const config::RunConfig& cfg) {
  const fs::path dir = prepare_output(cfg);
  const auto cs = casestudy::run(cfg);
  const double snr = cfg.localize.snr_db;
  {
    auto out = open_out(dir / "metrics.csv");
    out << "engine,snr_db,mean_err_m,p50,p90,tf_residual_pct\n";
    write_metrics_row(out, "linear", snr, cs.linear.metrics);
    write_metrics_row(out, "nonlinear", snr, cs.nonlinear.metrics);
    write_metrics_row(out, "ideal", snr, cs.ideal);
  }
  for (const auto* e : {&cs.linear, &cs.nonlinear}) {
    const std::string name = engine_name(e->kind);
    write_history(dir / ("history_" + name + ".csv"), e->optimization.best_run());
    write_phases(dir / ("phases_" + name + ".csv"), e->phases);
    write_confusion(dir / ("confusion_" + name + ".csv"), e->metrics.confusion);
    write_scatter_svg(dir / ("scatter_" + name + ".svg"), e->metrics, cfg.scene.region);
    optim::EngineOptions eo = cfg.engine;
    eo.kind = e->kind;
    const auto map = locapp::dominant_channel_map(locapp::engine_response(cs.scene, eo, e->phases, cs.drive_scale),
                                                  cs.grid, cfg.localize.map_angle_points,
                                                  cfg.localize.map_range_points);
    write_channel_map(dir / ("channel_map_" + name + ".csv"), map);
  }
  write_confusion(dir / "confusion_ideal.csv", cs.ideal.confusion);
  write_scatter_svg(dir / "scatter_ideal.svg", cs.ideal, cfg.scene.region);
  write_channel_map(dir / "channel_map_ideal.csv",
                    locapp::dominant_channel_map(locapp::ideal_model(cs.grid), cs.grid, cfg.localize.map_angle_points,
                                                 cfg.localize.map_range_points));

  std::printf("%-10s %12s %10s %10s %14s %8s\n", "engine", "mean [cm]", "p50 [cm]", "p90 [cm]", "residual [%]",
              "time [s]");
  auto row = [](const char* name, const locapp::LocalizationMetrics& m, double seconds) {
    std::printf("%-10s %12.3f %10.3f %10.3f %14.3f %8.1f\n", name, 100.0 * m.mean_error, 100.0 * m.p50,
                100.0 * m.p90, m.tf_residual_pct, seconds);
  };
  row("linear", cs.linear.metrics, cs.linear.seconds);
  row("nonlinear", cs.nonlinear.metrics, cs.nonlinear.seconds);
  row("ideal", cs.ideal, 0.0);
  return 0;
}

int cmd_gradcheck(const config::RunConfig& cfg) {
  const fs::path dir = prepare_output(cfg);
  const auto& g = cfg.gradcheck;
  const auto lin = checks::linear_gradcheck(g.linear_scenes, cfg.seed, g.linear_step);
  const auto nl = checks::nonlinear_gradcheck(g.nonlinear_scenes, cfg.seed, g.nonlinear_step);
  auto out = open_out(dir / "gradcheck.csv");
  out << "engine,case,q,k,i,rel_error\n";
  auto rows = [&](const char* name, const checks::GradcheckReport& r) {
    for (std::size_t c = 0; c < r.cases.size(); ++c) {
      const auto& x = r.cases[c];
      out << name << ',' << c << ',' << x.stages << ',' << x.per_layer << ',' << x.excitations << ','
          << num(x.rel_error) << '\n';
    }
  };
  rows("linear", lin);
  rows("nonlinear", nl);
  const bool lin_ok = lin.max_rel_error <= g.linear_tol;
  const bool nl_ok = nl.max_rel_error <= g.nonlinear_tol;
  std::printf("linear    %zu scenes  max rel err %.3e  (tol %.1e)  %s\n", lin.cases.size(), lin.max_rel_error,
              g.linear_tol, lin_ok ? "ok" : "FAILED");
  std::printf("nonlinear %zu scenes  max rel err %.3e  (tol %.1e)  %s\n", nl.cases.size(), nl.max_rel_error,
              g.nonlinear_tol, nl_ok ? "ok" : "FAILED");
  return lin_ok && nl_ok ? 0 : 1;
}

int cmd_bench(const config::RunConfig& cfg) {
  const fs::path dir = prepare_output(cfg);
  const auto& b = cfg.bench;
  auto out = open_out(dir / "timing.csv");
  out << "sweep,q,k,seconds\n";
  std::vector<double> qs, tq, ks, tk;
  for (int q : b.q_values) {
    const double t = checks::time_structured_solve(q, b.fixed_k, b.repeats, cfg.seed);
    out << "q," << q << ',' << b.fixed_k << ',' << num(t) << '\n';
    qs.push_back(q);
    tq.push_back(t);
  }
  for (int k : b.k_values) {
    const double t = checks::time_structured_solve(b.fixed_q, k, b.repeats, cfg.seed);
    out << "k," << b.fixed_q << ',' << k << ',' << num(t) << '\n';
    ks.push_back(k);
    tk.push_back(t);
  }
  const double slope_q = checks::loglog_slope(qs, tq);
  const double slope_k = checks::loglog_slope(ks, tk);
  open_out(dir / "slopes.ini") << "[slopes]\nq = " << num(slope_q) << "\nk = " << num(slope_k) << '\n';
  const bool q_ok = slope_q >= 0.8 && slope_q <= 1.2;
  const bool k_ok = slope_k >= 2.5 && slope_k <= 3.5;
  std::printf("slope vs Q (K=%d): %.3f  expected [0.8, 1.2]  %s\n", b.fixed_k, slope_q, q_ok ? "ok" : "FAILED");
  std::printf("slope vs K (Q=%d): %.3f  expected [2.5, 3.5]  %s\n", b.fixed_q, slope_k, k_ok ? "ok" : "FAILED");
  return q_ok && k_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiport SIM network simulator"};
  app.require_subcommand(1);
  std::string config_path = "configs/default.ini";
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "Configuration file")->capture_default_str();
  app.add_option("--set", overrides, "Override a key, e.g. engine.law.rs=0.1")->take_all();

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const config::RunConfig&);
  };
  const Command commands[] = {
      {"scene-dump", "Write the scattering blocks as cmx files", cmd_scene_dump},
      {"fit-rapp", "Diode limiter AM/AM by harmonic balance and Rapp fit", cmd_fit_rapp},
      {"optimize", "Optimize cell phases of engine.kind against the anchor targets", cmd_optimize},
      {"localize", "Full case study: both engines, ideal benchmark, Monte Carlo", cmd_localize},
      {"gradcheck", "Adjoint vs finite-difference gradients for both engines", cmd_gradcheck},
      {"bench", "Structured solve scaling in Q and K", cmd_bench},
  };
  for (const auto& c : commands) app.add_subcommand(c.name, c.help)->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = config::load(config_path, overrides);
    for (const auto& c : commands) {
      if (app.got_subcommand(c.name)) return c.run(cfg);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
