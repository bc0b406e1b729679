#include "uresim.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <new>
#include <span>
#include <sstream>
#include <string>

#include "uresim/allocator.hpp"
#include "uresim/errors.hpp"
#include "uresim/experiment.hpp"
#include "uresim/game.hpp"
#include "uresim/reliability.hpp"
#include "uresim/simulator.hpp"

struct ur_sim_config {
  uresim::SimConfig value;
};

struct ur_experiment {
  uresim::ExperimentSpec spec;
};

namespace {

thread_local std::string g_last_error;

template <typename Fn>
ur_status guarded(Fn&& fn) noexcept {
  try {
    fn();
    g_last_error.clear();
    return UR_OK;
  } catch (const uresim::InfeasibleError& e) {
    g_last_error = e.what();
    return UR_ERR_INFEASIBLE;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return UR_ERR_INVALID_ARGUMENT;
  } catch (const std::ios_base::failure& e) {
    g_last_error = e.what();
    return UR_ERR_IO;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return UR_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return UR_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return UR_ERR_INTERNAL;
  }
}

ur_status require(bool ok, const char* message) noexcept {
  if (ok) return UR_OK;
  g_last_error = message;
  return UR_ERR_INVALID_ARGUMENT;
}

uresim::GameParams to_core(const ur_game_params& p) {
  uresim::GameParams core;
  core.arrival_rate = p.rho;
  core.retransmit_prob = p.p;
  core.delay_budget = p.tau;
  core.total_blocks = p.n_blocks;
  core.loss_bound = p.epsilon;
  core.block_cost = p.b;
  core.common_efficiency = p.a;
  core.bits_per_block = p.c;
  core.requested_bits = p.r;
  return core;
}

uresim::AllocationProblem to_problem(const double* granted,
                                     const double* requested, int users,
                                     double budget) {
  if (users < 1) throw std::invalid_argument("users must be >= 1");
  if (granted == nullptr || requested == nullptr) {
    throw std::invalid_argument("granted and requested must not be NULL");
  }
  uresim::AllocationProblem problem;
  problem.granted.assign(granted, granted + users);
  problem.requested.assign(requested, requested + users);
  problem.budget = budget;
  return problem;
}

char* dup_string(const std::string& text) {
  char* out = new char[text.size() + 1];
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

ur_metrics_report to_c_report(const uresim::MetricsReport& rep) {
  ur_metrics_report out{};
  out.seed = rep.seed;
  out.frames = rep.frames;
  out.n1_mean = rep.mean_common_blocks;
  out.n2_mean = rep.mean_grant_based_blocks;
  out.urllc_arrived = rep.urllc_arrived;
  out.urllc_lost = rep.urllc_lost;
  out.urllc_loss_prob = rep.urllc_loss_prob;
  out.embb_arrived_bits = rep.embb_arrived_bits;
  out.embb_lost_bits = rep.embb_lost_bits;
  out.embb_loss_prob = rep.embb_loss_prob;
  out.sample_variance = rep.sample_variance;
  out.jain_index = rep.jain_index;
  out.social_payoff = rep.social_payoff;
  return out;
}

}  // namespace

extern "C" {

const char* ur_version(void) { return "1.0.0"; }

const char* ur_status_name(ur_status status) {
  switch (status) {
    case UR_OK: return "ok";
    case UR_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case UR_ERR_INFEASIBLE: return "infeasible";
    case UR_ERR_IO: return "io_error";
    case UR_ERR_INTERNAL: return "internal_error";
  }
  return "unknown";
}

const char* ur_last_error(void) { return g_last_error.c_str(); }

ur_status ur_failure_prob_exact_tau3(double rho_tilde, double p, double* out) {
  if (ur_status s = require(out != nullptr, "out must not be NULL")) return s;
  return guarded([&] {
    *out = uresim::failure_prob_exact_tau3(
        uresim::RetransParams{rho_tilde, p, 3});
  });
}

ur_status ur_light_traffic_coefficient(double p, int tau, double* out) {
  if (ur_status s = require(out != nullptr, "out must not be NULL")) return s;
  return guarded([&] { *out = uresim::light_traffic_coefficient(p, tau); });
}

ur_status ur_failure_prob_light_traffic(double rho_tilde, double p, int tau,
                                        double* out) {
  if (ur_status s = require(out != nullptr, "out must not be NULL")) return s;
  return guarded([&] {
    *out = uresim::failure_prob_light_traffic(
        uresim::RetransParams{rho_tilde, p, tau});
  });
}

ur_status ur_failure_prob_per_region(double rho, double p, int tau, int blocks,
                                     double* out) {
  if (ur_status s = require(out != nullptr, "out must not be NULL")) return s;
  return guarded(
      [&] { *out = uresim::failure_prob_per_region(rho, p, tau, blocks); });
}

ur_status ur_failure_prob_monte_carlo(double rho_tilde, double p, int tau,
                                      long long trials, uint64_t seed,
                                      int threads, ur_mc_estimate* out) {
  if (ur_status s = require(out != nullptr, "out must not be NULL")) return s;
  return guarded([&] {
    const auto est = uresim::failure_prob_monte_carlo(
        uresim::RetransParams{rho_tilde, p, tau}, trials, seed,
        std::max(1, threads));
    out->estimate = est.estimate;
    out->std_error = est.std_error;
    out->trials = est.trials;
    out->seed = est.seed;
  });
}

void ur_game_params_defaults(ur_game_params* params) {
  if (params == nullptr) return;
  const uresim::GameParams core;
  params->rho = core.arrival_rate;
  params->p = core.retransmit_prob;
  params->tau = core.delay_budget;
  params->n_blocks = core.total_blocks;
  params->epsilon = core.loss_bound;
  params->b = core.block_cost;
  params->a = core.common_efficiency;
  params->c = core.bits_per_block;
  params->r = core.requested_bits;
}

ur_status ur_game_throughput(const ur_game_params* params, int n1, int n2,
                             double* out) {
  if (ur_status s = require(params != nullptr && out != nullptr,
                            "params and out must not be NULL")) {
    return s;
  }
  return guarded([&] { *out = uresim::throughput(n1, n2, to_core(*params)); });
}

ur_status ur_game_min_grant_blocks(const ur_game_params* params, int n1,
                                   int* out) {
  if (ur_status s = require(params != nullptr && out != nullptr,
                            "params and out must not be NULL")) {
    return s;
  }
  return guarded(
      [&] { *out = uresim::min_grant_blocks(n1, to_core(*params)); });
}

ur_status ur_game_min_common_blocks(const ur_game_params* params, int* out,
                                    int* found) {
  if (ur_status s = require(params != nullptr && out != nullptr &&
                                found != nullptr,
                            "params, out and found must not be NULL")) {
    return s;
  }
  return guarded([&] {
    const auto floor = uresim::min_common_blocks(to_core(*params));
    *found = floor.has_value() ? 1 : 0;
    *out = floor.value_or(-1);
  });
}

ur_status ur_game_payoffs(const ur_game_params* params, int n1, int n2,
                          double* urllc, double* embb, double* social) {
  if (ur_status s = require(params != nullptr, "params must not be NULL")) {
    return s;
  }
  return guarded([&] {
    const auto core = to_core(*params);
    const uresim::ActionProfile profile{n1, n2};
    const double pu = uresim::payoff_urllc(profile, core);
    const double pe = uresim::payoff_embb(profile, core);
    if (urllc != nullptr) *urllc = pu;
    if (embb != nullptr) *embb = pe;
    if (social != nullptr) *social = pu + pe;
  });
}

const char* ur_game_case_name(ur_game_case case_id) {
  return uresim::game_case_name(static_cast<uresim::GameCase>(case_id));
}

ur_status ur_game_solve(const ur_game_params* params,
                        ur_equilibrium_result* out) {
  if (ur_status s = require(params != nullptr && out != nullptr,
                            "params and out must not be NULL")) {
    return s;
  }
  return guarded([&] {
    const auto result = uresim::solve_equilibrium(to_core(*params));
    out->case_id = static_cast<ur_game_case>(result.case_id);
    out->equilibrium_count = static_cast<int>(result.equilibria.size());
    out->socially_optimal_count =
        static_cast<int>(result.socially_optimal.size());
    out->degenerate_epsilon = result.degenerate_loss_bound ? 1 : 0;
    for (std::size_t i = 0; i < 2; ++i) {
      out->equilibria[i] = ur_profile{0, 0};
      out->socially_optimal[i] = ur_profile{0, 0};
      out->social_payoffs[i] = 0.0;
    }
    for (std::size_t i = 0; i < result.equilibria.size() && i < 2; ++i) {
      out->equilibria[i] = ur_profile{result.equilibria[i].common_blocks,
                                      result.equilibria[i].grant_based_blocks};
      out->social_payoffs[i] = result.social_payoffs[i];
    }
    for (std::size_t i = 0; i < result.socially_optimal.size() && i < 2; ++i) {
      out->socially_optimal[i] =
          ur_profile{result.socially_optimal[i].common_blocks,
                     result.socially_optimal[i].grant_based_blocks};
    }
  });
}

ur_status ur_game_enumerate(const ur_game_params* params, ur_profile* out,
                            int capacity, int* count) {
  if (ur_status s = require(params != nullptr && count != nullptr,
                            "params and count must not be NULL")) {
    return s;
  }
  if (ur_status s = require(capacity == 0 || out != nullptr,
                            "out must not be NULL when capacity > 0")) {
    return s;
  }
  return guarded([&] {
    const auto found = uresim::enumerate_pure_nash(to_core(*params));
    *count = static_cast<int>(found.size());
    const int n = std::min<int>(capacity, static_cast<int>(found.size()));
    for (int i = 0; i < n; ++i) {
      out[i] = ur_profile{found[static_cast<std::size_t>(i)].common_blocks,
                          found[static_cast<std::size_t>(i)].grant_based_blocks};
    }
  });
}

const char* ur_alloc_method_name(ur_alloc_method method) {
  switch (method) {
    case UR_ALLOC_WATER_FILL: return "water_fill";
    case UR_ALLOC_SMALLEST_FIRST: return "smallest_first";
    case UR_ALLOC_LARGEST_FIRST: return "largest_first";
    case UR_ALLOC_RANDOM_ORDER: return "random_order";
    case UR_ALLOC_TWO_STEP: return "two_step";
    case UR_ALLOC_MAX_MIN: return "max_min";
  }
  return "unknown";
}

ur_status ur_allocate(ur_alloc_method method, const double* granted,
                      const double* requested, int users, double budget,
                      uint64_t seed, double* grants_out) {
  if (ur_status s = require(grants_out != nullptr,
                            "grants_out must not be NULL")) {
    return s;
  }
  return guarded([&] {
    const auto problem = to_problem(granted, requested, users, budget);
    std::vector<double> grants;
    if (method == UR_ALLOC_WATER_FILL) {
      grants = uresim::water_fill(problem);
    } else {
      uresim::rng::Engine engine(
          uresim::rng::stream_seed(seed, "random-order-allocator"));
      uresim::BaselineMethod core;
      switch (method) {
        case UR_ALLOC_SMALLEST_FIRST:
          core = uresim::BaselineMethod::kSmallestFirst;
          break;
        case UR_ALLOC_LARGEST_FIRST:
          core = uresim::BaselineMethod::kLargestFirst;
          break;
        case UR_ALLOC_RANDOM_ORDER:
          core = uresim::BaselineMethod::kRandomOrder;
          break;
        case UR_ALLOC_TWO_STEP:
          core = uresim::BaselineMethod::kTwoStep;
          break;
        case UR_ALLOC_MAX_MIN:
          core = uresim::BaselineMethod::kMaxMin;
          break;
        default:
          throw std::invalid_argument("unknown allocation method");
      }
      grants = uresim::allocate_baseline(core, problem, engine);
    }
    std::copy(grants.begin(), grants.end(), grants_out);
  });
}

ur_status ur_alloc_objective(const double* granted, const double* requested,
                             int users, double budget, const double* grants,
                             double* out) {
  if (ur_status s = require(grants != nullptr && out != nullptr,
                            "grants and out must not be NULL")) {
    return s;
  }
  return guarded([&] {
    const auto problem = to_problem(granted, requested, users, budget);
    *out = uresim::allocation_objective(
        problem, std::span<const double>(grants,
                                         static_cast<std::size_t>(users)));
  });
}

ur_status ur_alloc_kkt(const double* granted, const double* requested,
                       int users, double budget, const double* grants,
                       double* mu_out, double* omega_out, int* bound_state_out,
                       ur_kkt_info* info) {
  if (ur_status s = require(grants != nullptr && info != nullptr,
                            "grants and info must not be NULL")) {
    return s;
  }
  return guarded([&] {
    const auto problem = to_problem(granted, requested, users, budget);
    const auto cert = uresim::kkt_certificate(
        problem, std::span<const double>(grants,
                                         static_cast<std::size_t>(users)));
    info->lambda = cert.lambda.value_or(0.0);
    info->lambda_defined = cert.lambda.has_value() ? 1 : 0;
    info->stationarity_residual = cert.stationarity_residual;
    info->complementarity_residual = cert.complementarity_residual;
    for (int i = 0; i < users; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      if (mu_out != nullptr) mu_out[i] = cert.mu[idx];
      if (omega_out != nullptr) omega_out[i] = cert.omega[idx];
      if (bound_state_out != nullptr) {
        bound_state_out[i] = static_cast<int>(cert.bound_state[idx]);
      }
    }
  });
}

ur_status ur_sample_variance(const double* values, int count, double* out) {
  if (ur_status s = require(values != nullptr && out != nullptr,
                            "values and out must not be NULL")) {
    return s;
  }
  return guarded([&] {
    *out = uresim::sample_variance(
        std::span<const double>(values, static_cast<std::size_t>(count)));
  });
}

ur_status ur_jain_index(const double* values, int count, double* out) {
  if (ur_status s = require(values != nullptr && out != nullptr,
                            "values and out must not be NULL")) {
    return s;
  }
  if (ur_status s = require(count >= 0, "count must be >= 0")) return s;
  return guarded([&] {
    *out = uresim::jain_index(
        std::span<const double>(values, static_cast<std::size_t>(count)));
  });
}

ur_sim_config* ur_sim_config_create(void) {
  return new (std::nothrow) ur_sim_config{};
}

void ur_sim_config_destroy(ur_sim_config* config) { delete config; }

ur_sim_config* ur_sim_config_clone(const ur_sim_config* config) {
  if (config == nullptr) return nullptr;
  return new (std::nothrow) ur_sim_config{config->value};
}

ur_status ur_sim_config_set(ur_sim_config* config, const char* key,
                            const char* value) {
  if (ur_status s = require(config != nullptr && key != nullptr &&
                                value != nullptr,
                            "config, key and value must not be NULL")) {
    return s;
  }
  return guarded([&] { uresim::sim_config_set(config->value, key, value); });
}

ur_status ur_sim_config_get(const ur_sim_config* config, const char* key,
                            char* buffer, size_t buffer_size) {
  if (ur_status s = require(config != nullptr && key != nullptr &&
                                buffer != nullptr && buffer_size > 0,
                            "config, key and buffer must be usable")) {
    return s;
  }
  return guarded([&] {
    const std::string text = uresim::sim_config_get(config->value, key);
    if (text.size() + 1 > buffer_size) {
      throw std::invalid_argument("buffer too small for value of '" +
                                  std::string(key) + "'");
    }
    std::memcpy(buffer, text.c_str(), text.size() + 1);
  });
}

ur_status ur_sim_config_to_json(const ur_sim_config* config, char** out) {
  if (ur_status s = require(config != nullptr && out != nullptr,
                            "config and out must not be NULL")) {
    return s;
  }
  return guarded(
      [&] { *out = dup_string(uresim::sim_config_to_json(config->value)); });
}

ur_status ur_sim_config_load_json(ur_sim_config* config,
                                  const char* json_text) {
  if (ur_status s = require(config != nullptr && json_text != nullptr,
                            "config and json_text must not be NULL")) {
    return s;
  }
  return guarded([&] {
    config->value = uresim::sim_config_from_json(json_text, config->value);
  });
}

void ur_string_free(char* text) { delete[] text; }

ur_status ur_sim_run(const ur_sim_config* config, ur_metrics_report* out) {
  if (ur_status s = require(config != nullptr && out != nullptr,
                            "config and out must not be NULL")) {
    return s;
  }
  return guarded(
      [&] { *out = to_c_report(uresim::run_simulation(config->value)); });
}

ur_status ur_sim_run_traced(const ur_sim_config* config,
                            const char* trace_path, ur_metrics_report* out) {
  if (ur_status s = require(config != nullptr && trace_path != nullptr &&
                                out != nullptr,
                            "config, trace_path and out must not be NULL")) {
    return s;
  }
  return guarded([&] {
    std::ostringstream trace;
    const auto report = uresim::run_simulation_traced(config->value, trace);
    uresim::write_text_file(trace_path, trace.str());
    *out = to_c_report(report);
  });
}

ur_experiment* ur_experiment_create(const ur_sim_config* base) {
  if (base == nullptr) return nullptr;
  auto* experiment = new (std::nothrow) ur_experiment{};
  if (experiment != nullptr) experiment->spec.base = base->value;
  return experiment;
}

void ur_experiment_destroy(ur_experiment* experiment) { delete experiment; }

ur_status ur_experiment_add_sweep(ur_experiment* experiment, const char* field,
                                  const char* comma_values) {
  if (ur_status s = require(experiment != nullptr && field != nullptr &&
                                comma_values != nullptr,
                            "experiment, field and values must not be NULL")) {
    return s;
  }
  return guarded([&] { experiment->spec.add_axis(field, comma_values); });
}

ur_status ur_experiment_set_seeds(ur_experiment* experiment,
                                  const uint64_t* seeds, int count) {
  if (ur_status s = require(experiment != nullptr && (count == 0 ||
                                                      seeds != nullptr),
                            "seeds must not be NULL when count > 0")) {
    return s;
  }
  if (ur_status s = require(count >= 0, "count must be >= 0")) return s;
  return guarded([&] {
    experiment->spec.seeds.assign(seeds, seeds + count);
  });
}

ur_status ur_experiment_set_threads(ur_experiment* experiment, int threads) {
  if (ur_status s = require(experiment != nullptr,
                            "experiment must not be NULL")) {
    return s;
  }
  if (ur_status s = require(threads >= 1, "threads must be >= 1")) return s;
  experiment->spec.threads = threads;
  return UR_OK;
}

ur_status ur_experiment_csv(ur_experiment* experiment, char** out) {
  if (ur_status s = require(experiment != nullptr && out != nullptr,
                            "experiment and out must not be NULL")) {
    return s;
  }
  return guarded([&] {
    const auto result = uresim::run_experiment(experiment->spec);
    *out = dup_string(result.csv());
  });
}

ur_status ur_experiment_run_to_file(ur_experiment* experiment,
                                    const char* path, long long* rows_out) {
  if (ur_status s = require(experiment != nullptr && path != nullptr,
                            "experiment and path must not be NULL")) {
    return s;
  }
  return guarded([&] {
    const auto result = uresim::run_experiment(experiment->spec);
    uresim::write_text_file(path, result.csv());
    if (rows_out != nullptr) {
      *rows_out = static_cast<long long>(result.rows.size());
    }
  });
}

const char* ur_experiment_csv_header(void) {
  static const std::string header = uresim::experiment_csv_header();
  return header.c_str();
}

}  // extern "C"
