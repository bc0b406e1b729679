// Command line front end for the uresim shared library. Talks to the
// library exclusively through its C interface.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "uresim.h"

namespace {

[[noreturn]] void fail(const std::string& context) {
  std::cerr << "error: " << context;
  const char* detail = ur_last_error();
  if (detail != nullptr && detail[0] != '\0') {
    std::cerr << ": " << detail;
  }
  std::cerr << "\n";
  std::exit(1);
}

void check(ur_status status, const std::string& context) {
  if (status != UR_OK) fail(context);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string current;
  for (char ch : text) {
    if (ch == sep) {
      parts.push_back(current);
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  parts.push_back(current);
  return parts;
}

int run_reliability(double rho_per_block, double rho_total, int blocks,
                    double p, int tau, long long trials, std::uint64_t seed,
                    int threads) {
  if (blocks > 0) {
    double region = 0.0;
    check(ur_failure_prob_per_region(rho_total, p, tau, blocks, &region),
          "failure_prob_per_region");
    std::printf("blocks                    %d\n", blocks);
    std::printf("rho (band)                %.10g\n", rho_total);
    std::printf("loss probability          %.10g\n", region);
    rho_per_block = rho_total / blocks;
  }
  double coeff = 0.0;
  check(ur_light_traffic_coefficient(p, tau, &coeff),
        "light_traffic_coefficient");
  double light = 0.0;
  check(ur_failure_prob_light_traffic(rho_per_block, p, tau, &light),
        "failure_prob_light_traffic");
  std::printf("rho per block             %.10g\n", rho_per_block);
  std::printf("p                         %.10g\n", p);
  std::printf("tau                       %d\n", tau);
  std::printf("light-traffic coefficient %.10g\n", coeff);
  std::printf("light-traffic loss prob   %.10g\n", light);
  if (tau == 3) {
    double exact = 0.0;
    check(ur_failure_prob_exact_tau3(rho_per_block, p, &exact),
          "failure_prob_exact_tau3");
    std::printf("exact loss prob (tau=3)   %.10g\n", exact);
  }
  if (trials > 0) {
    ur_mc_estimate est{};
    check(ur_failure_prob_monte_carlo(rho_per_block, p, tau, trials, seed,
                                      threads, &est),
          "failure_prob_monte_carlo");
    std::printf(
        "monte carlo estimate      %.10g (std error %.3g, %lld trials, "
        "seed %" PRIu64 ")\n",
        est.estimate, est.std_error, est.trials, est.seed);
  }
  return 0;
}

int run_game(const ur_game_params& params, bool enumerate, bool matrix) {
  int floor_common = -1;
  int floor_found = 0;
  check(ur_game_min_common_blocks(&params, &floor_common, &floor_found),
        "min_common_blocks");
  if (floor_found) {
    std::printf("min common blocks (n1*)   %d\n", floor_common);
    int grant_at_floor = 0;
    check(ur_game_min_grant_blocks(&params, floor_common, &grant_at_floor),
          "min_grant_blocks");
    std::printf("min grant blocks at n1*   %d\n", grant_at_floor);
  } else {
    std::printf("min common blocks (n1*)   none (loss bound unreachable)\n");
  }
  int grant_alone = 0;
  check(ur_game_min_grant_blocks(&params, 0, &grant_alone), "min_grant_blocks");
  std::printf("min grant blocks at n1=0  %d\n", grant_alone);

  ur_equilibrium_result result{};
  check(ur_game_solve(&params, &result), "game solve");
  if (result.degenerate_epsilon) {
    std::printf("warning: epsilon >= 1 makes every split acceptable\n");
  }
  std::printf("case                      %s\n",
              ur_game_case_name(result.case_id));
  for (int i = 0; i < result.equilibrium_count; ++i) {
    std::printf(
        "equilibrium %d             (n1=%d, n2=%d)  social payoff %.10g\n",
        i + 1, result.equilibria[i].n1, result.equilibria[i].n2,
        result.social_payoffs[i]);
  }
  for (int i = 0; i < result.socially_optimal_count; ++i) {
    std::printf("socially optimal          (n1=%d, n2=%d)\n",
                result.socially_optimal[i].n1, result.socially_optimal[i].n2);
  }

  if (enumerate) {
    std::vector<ur_profile> found(16);
    int count = 0;
    check(ur_game_enumerate(&params, found.data(),
                            static_cast<int>(found.size()), &count),
          "enumerate_pure_nash");
    std::printf("enumerated equilibria     %d:", count);
    for (int i = 0; i < count && i < static_cast<int>(found.size()); ++i) {
      std::printf(" (%d,%d)", found[i].n1, found[i].n2);
    }
    std::printf("\n");
  }
  if (matrix) {
    std::printf("payoff matrix (rows n1, cols n2): urllc/embb\n");
    for (int i = 0; i <= params.n_blocks; ++i) {
      for (int j = 0; j <= params.n_blocks; ++j) {
        double pu = 0.0, pe = 0.0;
        check(ur_game_payoffs(&params, i, j, &pu, &pe, nullptr), "payoffs");
        std::printf("%s%.4g/%.4g", j == 0 ? "" : " ", pu, pe);
      }
      std::printf("\n");
    }
  }
  return 0;
}

int run_alloc(const std::string& input_path, const std::string& method_name,
              std::uint64_t seed) {
  static const std::map<std::string, ur_alloc_method> kMethods = {
      {"water_fill", UR_ALLOC_WATER_FILL},
      {"smallest_first", UR_ALLOC_SMALLEST_FIRST},
      {"largest_first", UR_ALLOC_LARGEST_FIRST},
      {"random_order", UR_ALLOC_RANDOM_ORDER},
      {"two_step", UR_ALLOC_TWO_STEP},
      {"max_min", UR_ALLOC_MAX_MIN},
  };
  const auto method_it = kMethods.find(method_name);
  if (method_it == kMethods.end()) {
    std::cerr << "error: unknown method '" << method_name << "'\n";
    return 1;
  }

  // One record per user plus the frame budget:
  //   budget <bits>
  //   user <id> <granted-so-far> <requested>
  std::vector<long long> ids;
  std::vector<double> granted;
  std::vector<double> requested;
  double budget = 0.0;
  bool budget_seen = false;
  std::ifstream in(input_path);
  if (!in) fail("cannot open '" + input_path + "'");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string tag;
    if (!(fields >> tag) || tag[0] == '#') continue;
    if (tag == "budget") {
      if (!(fields >> budget)) {
        fail(input_path + ": bad budget line " + std::to_string(line_no));
      }
      budget_seen = true;
    } else if (tag == "user") {
      long long id = 0;
      double z = 0.0, r = 0.0;
      if (!(fields >> id >> z >> r)) {
        fail(input_path + ": bad user line " + std::to_string(line_no));
      }
      ids.push_back(id);
      granted.push_back(z);
      requested.push_back(r);
    } else {
      fail(input_path + ": unknown record '" + tag + "' on line " +
           std::to_string(line_no));
    }
  }
  if (!budget_seen) fail(input_path + ": missing budget record");
  if (ids.empty()) fail(input_path + ": no user records");

  const int users = static_cast<int>(ids.size());
  std::vector<double> grants(ids.size(), 0.0);
  check(ur_allocate(method_it->second, granted.data(), requested.data(), users,
                    budget, seed, grants.data()),
        "allocate");

  double objective = 0.0;
  check(ur_alloc_objective(granted.data(), requested.data(), users, budget,
                           grants.data(), &objective),
        "objective");
  std::vector<double> mu(ids.size(), 0.0), omega(ids.size(), 0.0);
  std::vector<int> state(ids.size(), 0);
  ur_kkt_info info{};
  check(ur_alloc_kkt(granted.data(), requested.data(), users, budget,
                     grants.data(), mu.data(), omega.data(), state.data(),
                     &info),
        "kkt certificate");

  static const char* kStateNames[] = {"interior", "at_zero", "at_request",
                                      "idle"};
  std::printf("method %s, budget %.10g, users %d\n", method_name.c_str(),
              budget, users);
  std::printf("%8s %14s %14s %14s %12s %10s %10s\n", "user", "granted",
              "requested", "grant", "state", "mu", "omega");
  std::vector<double> totals(ids.size(), 0.0);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    totals[i] = granted[i] + grants[i];
    std::printf("%8lld %14.6f %14.6f %14.6f %12s %10.4g %10.4g\n", ids[i],
                granted[i], requested[i], grants[i], kStateNames[state[i]],
                mu[i], omega[i]);
  }
  std::printf("objective                 %.12g\n", objective);
  if (info.lambda_defined) {
    std::printf("lambda                    %.12g\n", info.lambda);
  } else {
    std::printf("lambda                    none (no interior user)\n");
  }
  std::printf("stationarity residual     %.3g\n", info.stationarity_residual);
  std::printf("complementarity residual  %.3g\n",
              info.complementarity_residual);
  double variance = 0.0, jain = 0.0;
  if (users >= 2) {
    check(ur_sample_variance(totals.data(), users, &variance), "variance");
    std::printf("post-grant variance       %.12g\n", variance);
  }
  check(ur_jain_index(totals.data(), users, &jain), "jain index");
  std::printf("post-grant jain index     %.12g\n", jain);
  return 0;
}

void print_summary(const std::string& csv) {
  const auto lines = split(csv, '\n');
  if (lines.size() < 2) return;
  const auto header = split(lines[0], ',');
  static const char* kWanted[] = {
      "split_strategy",  "allocator",       "seed",
      "a",               "embb_users",      "urllc_loss_prob",
      "embb_loss_prob",  "sample_variance", "jain_index",
      "social_payoff"};
  std::vector<std::size_t> idx;
  for (const char* name : kWanted) {
    for (std::size_t col = 0; col < header.size(); ++col) {
      if (header[col] == name) {
        idx.push_back(col);
        break;
      }
    }
  }
  for (std::size_t j = 0; j < idx.size(); ++j) {
    std::printf("%s%-15s", j == 0 ? "" : " ", header[idx[j]].c_str());
  }
  std::printf("\n");
  const std::size_t show = std::min<std::size_t>(lines.size() - 1, 12);
  for (std::size_t row = 1; row <= show; ++row) {
    if (lines[row].empty()) continue;
    const auto cells = split(lines[row], ',');
    for (std::size_t j = 0; j < idx.size(); ++j) {
      std::printf("%s%-15.15s", j == 0 ? "" : " ",
                  idx[j] < cells.size() ? cells[idx[j]].c_str() : "");
    }
    std::printf("\n");
  }
  if (lines.size() - 1 > show) {
    std::printf("... (%zu more rows)\n", lines.size() - 1 - show);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Uplink URLLC/eMBB slicing: reliability analysis, region-sizing game, "
      "grant allocation and frame-level simulation"};
  app.require_subcommand(1);

  // reliability
  double rho_per_block = 0.01;
  double rho_total = 6.5e-4;
  int blocks = 0;
  double retransmit_p = 0.3;
  int tau = 8;
  long long trials = 0;
  std::uint64_t seed = 1;
  int threads = 1;
  auto* reliability =
      app.add_subcommand("reliability", "URLLC failure probabilities");
  reliability->add_option("--rho-per-block", rho_per_block,
                          "arrivals per mini slot on one block");
  reliability->add_option("--rho", rho_total,
                          "arrivals per mini slot over the whole band");
  reliability->add_option("--blocks", blocks,
                          "evaluate the per-region loss for this many blocks");
  reliability->add_option("--p", retransmit_p, "retransmission probability");
  reliability->add_option("--tau", tau, "delay budget in mini slots");
  reliability->add_option("--trials", trials,
                          "Monte Carlo trials (0 = skip simulation)");
  reliability->add_option("--seed", seed, "Monte Carlo seed");
  reliability->add_option("--threads", threads, "Monte Carlo worker threads");

  // game
  ur_game_params game_params{};
  ur_game_params_defaults(&game_params);
  bool enumerate = false;
  bool matrix = false;
  auto* game = app.add_subcommand("game", "solve the region-sizing game");
  game->add_option("--rho", game_params.rho, "URLLC arrivals per mini slot");
  game->add_option("--p", game_params.p, "retransmission probability");
  game->add_option("--tau", game_params.tau, "delay budget in mini slots");
  game->add_option("--n-blocks", game_params.n_blocks, "total resource blocks");
  game->add_option("--epsilon", game_params.epsilon, "URLLC loss bound");
  game->add_option("--b", game_params.b, "resource cost");
  game->add_option("--a", game_params.a, "common-region eMBB efficiency");
  game->add_option("--c", game_params.c, "bits per grant-based block");
  game->add_option("--r", game_params.r, "total requested bits per frame");
  game->add_flag("--enumerate", enumerate,
                 "also enumerate equilibria by brute force");
  game->add_flag("--matrix", matrix, "print the full payoff matrix");

  // alloc
  std::string alloc_input;
  std::string alloc_method = "water_fill";
  std::uint64_t alloc_seed = 1;
  auto* alloc = app.add_subcommand("alloc", "solve one grant allocation");
  alloc
      ->add_option("--input", alloc_input,
                   "problem file (budget/user records)")
      ->required();
  alloc->add_option("--method", alloc_method,
                    "water_fill|smallest_first|largest_first|random_order|"
                    "two_step|max_min");
  alloc->add_option("--seed", alloc_seed, "seed for random_order");

  // simulate
  std::string config_path;
  std::string out_path;
  std::string trace_path;
  long long frames_override = -1;
  std::uint64_t sim_seed = 0;
  int sim_threads = 1;
  std::vector<std::string> sweeps;
  std::vector<std::string> sets;
  bool print_config = false;
  auto* simulate =
      app.add_subcommand("simulate", "frame-level simulation and sweeps");
  simulate->add_option("--config", config_path, "JSON config file");
  auto* seed_option =
      simulate->add_option("--seed", sim_seed, "master seed override");
  simulate->add_option("--out", out_path, "CSV output path (default: stdout)");
  simulate->add_option("--frames", frames_override, "override frame count");
  simulate->add_option("--sweep", sweeps,
                       "sweep axis FIELD=v1,v2,... (repeatable)");
  simulate->add_option("--set", sets, "override FIELD=value (repeatable)");
  simulate->add_option("--threads", sim_threads, "worker threads for sweeps");
  simulate->add_option("--trace", trace_path,
                       "per-frame JSON trace (single cell only)");
  simulate->add_flag("--print-config", print_config,
                     "print the effective config as JSON and exit");

  CLI11_PARSE(app, argc, argv);

  if (reliability->parsed()) {
    return run_reliability(rho_per_block, rho_total, blocks, retransmit_p, tau,
                           trials, seed, threads);
  }
  if (game->parsed()) {
    return run_game(game_params, enumerate, matrix);
  }
  if (alloc->parsed()) {
    return run_alloc(alloc_input, alloc_method, alloc_seed);
  }

  // simulate
  ur_sim_config* config = ur_sim_config_create();
  if (config == nullptr) fail("cannot allocate config");
  if (!config_path.empty()) {
    const std::string text = read_file(config_path);
    check(ur_sim_config_load_json(config, text.c_str()), "loading config");
  }
  for (const std::string& assignment : sets) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) fail("--set needs FIELD=value");
    check(ur_sim_config_set(config, assignment.substr(0, eq).c_str(),
                            assignment.substr(eq + 1).c_str()),
          "applying --set");
  }
  if (seed_option->count() > 0) {
    check(ur_sim_config_set(config, "seed", std::to_string(sim_seed).c_str()),
          "applying --seed");
  }
  if (frames_override >= 0) {
    check(ur_sim_config_set(config, "frames",
                            std::to_string(frames_override).c_str()),
          "applying --frames");
  }
  if (print_config) {
    char* json = nullptr;
    check(ur_sim_config_to_json(config, &json), "serializing config");
    std::fputs(json, stdout);
    ur_string_free(json);
    ur_sim_config_destroy(config);
    return 0;
  }

  if (!trace_path.empty()) {
    if (!sweeps.empty()) fail("--trace supports single runs, not sweeps");
    ur_metrics_report report{};
    check(ur_sim_run_traced(config, trace_path.c_str(), &report),
          "traced simulation");
    std::printf(
        "frames %lld, urllc loss %.6g, embb loss %.6g, variance %.6g, "
        "jain %.6g, social payoff %.6g\n",
        report.frames, report.urllc_loss_prob, report.embb_loss_prob,
        report.sample_variance, report.jain_index, report.social_payoff);
    ur_sim_config_destroy(config);
    return 0;
  }

  ur_experiment* experiment = ur_experiment_create(config);
  if (experiment == nullptr) fail("cannot allocate experiment");
  for (const std::string& axis : sweeps) {
    const auto eq = axis.find('=');
    if (eq == std::string::npos) fail("--sweep needs FIELD=v1,v2,...");
    check(ur_experiment_add_sweep(experiment, axis.substr(0, eq).c_str(),
                                  axis.substr(eq + 1).c_str()),
          "adding sweep axis");
  }
  check(ur_experiment_set_threads(experiment, sim_threads), "setting threads");

  char* csv = nullptr;
  check(ur_experiment_csv(experiment, &csv), "running experiment");
  const std::string csv_text(csv);
  ur_string_free(csv);

  if (!out_path.empty()) {
    const std::string tmp = out_path + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) fail("cannot open '" + tmp + "'");
      out << csv_text;
      out.flush();
      if (!out) fail("failed writing '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), out_path.c_str()) != 0) {
      std::remove(tmp.c_str());
      fail("cannot move output into place at '" + out_path + "'");
    }
    const auto rows = split(csv_text, '\n').size() - 2;  // header, trailing \n
    std::printf("wrote %zu rows to %s\n", rows, out_path.c_str());
    print_summary(csv_text);
  } else {
    std::fputs(csv_text.c_str(), stdout);
  }

  ur_experiment_destroy(experiment);
  ur_sim_config_destroy(config);
  return 0;
}
