#include "uresim/experiment.hpp"

#include <atomic>
#include <charconv>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "text_format.hpp"

namespace uresim {

namespace {

using detail::format_double;
using detail::format_int;
using detail::format_uint;

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw std::invalid_argument("expected a number, got '" +
                                std::string(text) + "'");
  }
  return value;
}

template <typename Int>
Int parse_integer(std::string_view text) {
  Int value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw std::invalid_argument("expected an integer, got '" +
                                std::string(text) + "'");
  }
  return value;
}

AllocatorKind parse_allocator(std::string_view text) {
  for (AllocatorKind kind :
       {AllocatorKind::kWaterFill, AllocatorKind::kSmallestFirst,
        AllocatorKind::kLargestFirst, AllocatorKind::kRandomOrder,
        AllocatorKind::kTwoStep, AllocatorKind::kMaxMin}) {
    if (text == allocator_kind_name(kind)) return kind;
  }
  throw std::invalid_argument(
      "unknown allocator '" + std::string(text) +
      "' (expected water_fill|smallest_first|largest_first|random_order|"
      "two_step|max_min)");
}

SplitStrategy parse_strategy(std::string_view text) {
  for (SplitStrategy s :
       {SplitStrategy::kSocialOpt, SplitStrategy::kNonOptNash,
        SplitStrategy::kN1StarPlus1, SplitStrategy::kNMinus1One,
        SplitStrategy::kRandom}) {
    if (text == split_strategy_name(s)) return s;
  }
  throw std::invalid_argument(
      "unknown split_strategy '" + std::string(text) +
      "' (expected social_opt|nonopt_nash|n1star_plus1|nminus1_1|random)");
}

RequestMode parse_request_mode(std::string_view text) {
  for (RequestMode m : {RequestMode::kStatic, RequestMode::kPerFrame}) {
    if (text == request_mode_name(m)) return m;
  }
  throw std::invalid_argument("unknown request_mode '" + std::string(text) +
                              "' (expected static|per_frame)");
}

enum class FieldType { kString, kUnsigned, kInt, kDouble };

struct Field {
  const char* name;
  FieldType type;
  std::string (*get)(const SimConfig&);
  void (*set)(SimConfig&, std::string_view);
};

// Canonical field order; also the CSV column order.
const Field kFields[] = {
    {"split_strategy", FieldType::kString,
     [](const SimConfig& c) {
       return std::string(split_strategy_name(c.split_strategy));
     },
     [](SimConfig& c, std::string_view v) {
       c.split_strategy = parse_strategy(v);
     }},
    {"allocator", FieldType::kString,
     [](const SimConfig& c) {
       return std::string(allocator_kind_name(c.allocator));
     },
     [](SimConfig& c, std::string_view v) { c.allocator = parse_allocator(v); }},
    {"seed", FieldType::kUnsigned, [](const SimConfig& c) { return format_uint(c.seed); },
     [](SimConfig& c, std::string_view v) {
       c.seed = parse_integer<std::uint64_t>(v);
     }},
    {"frames", FieldType::kInt, [](const SimConfig& c) { return format_int(c.frames); },
     [](SimConfig& c, std::string_view v) {
       c.frames = parse_integer<long long>(v);
     }},
    {"rho", FieldType::kDouble, [](const SimConfig& c) { return format_double(c.game.arrival_rate); },
     [](SimConfig& c, std::string_view v) {
       c.game.arrival_rate = parse_double(v);
     }},
    {"p", FieldType::kDouble,
     [](const SimConfig& c) { return format_double(c.game.retransmit_prob); },
     [](SimConfig& c, std::string_view v) {
       c.game.retransmit_prob = parse_double(v);
     }},
    {"tau", FieldType::kInt, [](const SimConfig& c) { return format_int(c.game.delay_budget); },
     [](SimConfig& c, std::string_view v) {
       c.game.delay_budget = parse_integer<int>(v);
     }},
    {"n_blocks", FieldType::kInt,
     [](const SimConfig& c) { return format_int(c.game.total_blocks); },
     [](SimConfig& c, std::string_view v) {
       c.game.total_blocks = parse_integer<int>(v);
     }},
    {"epsilon", FieldType::kDouble,
     [](const SimConfig& c) { return format_double(c.game.loss_bound); },
     [](SimConfig& c, std::string_view v) {
       c.game.loss_bound = parse_double(v);
     }},
    {"b", FieldType::kDouble, [](const SimConfig& c) { return format_double(c.game.block_cost); },
     [](SimConfig& c, std::string_view v) {
       c.game.block_cost = parse_double(v);
     }},
    {"a", FieldType::kDouble,
     [](const SimConfig& c) { return format_double(c.game.common_efficiency); },
     [](SimConfig& c, std::string_view v) {
       c.game.common_efficiency = parse_double(v);
     }},
    {"c", FieldType::kDouble,
     [](const SimConfig& c) { return format_double(c.game.bits_per_block); },
     [](SimConfig& c, std::string_view v) {
       c.game.bits_per_block = parse_double(v);
     }},
    {"request_bits", FieldType::kDouble,
     [](const SimConfig& c) { return format_double(c.game.requested_bits); },
     [](SimConfig& c, std::string_view v) {
       c.game.requested_bits = parse_double(v);
     }},
    {"request_mode", FieldType::kString,
     [](const SimConfig& c) {
       return std::string(request_mode_name(c.request_mode));
     },
     [](SimConfig& c, std::string_view v) {
       c.request_mode = parse_request_mode(v);
     }},
    {"buffer_bits", FieldType::kDouble,
     [](const SimConfig& c) { return format_double(c.buffer_bits); },
     [](SimConfig& c, std::string_view v) { c.buffer_bits = parse_double(v); }},
    {"embb_users", FieldType::kInt, [](const SimConfig& c) { return format_int(c.embb_users); },
     [](SimConfig& c, std::string_view v) {
       c.embb_users = parse_integer<int>(v);
     }},
    {"slots_per_frame", FieldType::kInt,
     [](const SimConfig& c) { return format_int(c.slots_per_frame); },
     [](SimConfig& c, std::string_view v) {
       c.slots_per_frame = parse_integer<int>(v);
     }},
    {"minislots_per_slot", FieldType::kInt,
     [](const SimConfig& c) { return format_int(c.minislots_per_slot); },
     [](SimConfig& c, std::string_view v) {
       c.minislots_per_slot = parse_integer<int>(v);
     }},
    {"embb_arrival_max", FieldType::kDouble,
     [](const SimConfig& c) { return format_double(c.embb_arrival_max); },
     [](SimConfig& c, std::string_view v) {
       c.embb_arrival_max = parse_double(v);
     }},
};

const Field& find_field(std::string_view key) {
  for (const Field& f : kFields) {
    if (key == f.name) return f;
  }
  throw std::invalid_argument("unknown config field '" + std::string(key) +
                              "'");
}

constexpr const char* kSchemaTag = "uresim.v1";
constexpr long long kMaxRows = 1'000'000;

const char* kMetricColumns[] = {
    "n1_mean",           "n2_mean",        "urllc_arrived",
    "urllc_lost",        "urllc_loss_prob", "embb_arrived_bits",
    "embb_lost_bits",    "embb_loss_prob",  "sample_variance",
    "jain_index",        "social_payoff",
};

}  // namespace

std::vector<std::string> sim_config_field_names() {
  std::vector<std::string> names;
  for (const Field& f : kFields) names.emplace_back(f.name);
  return names;
}

void sim_config_set(SimConfig& config, std::string_view key,
                    std::string_view value) {
  const Field& field = find_field(key);
  try {
    field.set(config, value);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("config field '" + std::string(key) +
                                "': " + e.what());
  }
}

std::string sim_config_get(const SimConfig& config, std::string_view key) {
  return find_field(key).get(config);
}

std::string sim_config_to_json(const SimConfig& config) {
  nlohmann::ordered_json j;
  for (const Field& f : kFields) {
    const std::string text = f.get(config);
    switch (f.type) {
      case FieldType::kString:
        j[f.name] = text;
        break;
      case FieldType::kUnsigned:
        j[f.name] = parse_integer<std::uint64_t>(text);
        break;
      case FieldType::kInt:
        j[f.name] = parse_integer<long long>(text);
        break;
      case FieldType::kDouble:
        j[f.name] = parse_double(text);
        break;
    }
  }
  return j.dump(2) + "\n";
}

SimConfig sim_config_from_json(std::string_view json_text,
                               const SimConfig& base) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") +
                                e.what());
  }
  if (!doc.is_object()) {
    throw std::invalid_argument("config must be a JSON object");
  }
  SimConfig config = base;
  for (const auto& [key, value] : doc.items()) {
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_number_unsigned()) {
      text = format_uint(value.get<std::uint64_t>());
    } else if (value.is_number_integer()) {
      text = format_int(value.get<long long>());
    } else if (value.is_number_float()) {
      text = format_double(value.get<double>());
    } else {
      throw std::invalid_argument("config field '" + key +
                                  "': unsupported JSON value type");
    }
    sim_config_set(config, key, text);
  }
  return config;
}

void ExperimentSpec::add_axis(std::string_view field,
                              std::string_view comma_values) {
  std::vector<std::string> values;
  std::string current;
  for (char ch : comma_values) {
    if (ch == ',') {
      values.push_back(current);
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  values.push_back(current);
  if (values.empty() || (values.size() == 1 && values[0].empty())) {
    throw std::invalid_argument("sweep axis '" + std::string(field) +
                                "' has no values");
  }
  // Validate every value now so errors surface before any run starts.
  for (const std::string& v : values) {
    SimConfig probe = base;
    sim_config_set(probe, field, v);
  }
  axes.emplace_back(std::string(field), std::move(values));
}

long long ExperimentSpec::total_rows() const {
  long long cells = 1;
  for (const auto& [name, values] : axes) {
    cells *= static_cast<long long>(values.size());
    if (cells > kMaxRows) return cells;  // caller will reject
  }
  const long long seed_count =
      seeds.empty() ? 1 : static_cast<long long>(seeds.size());
  return cells * seed_count;
}

std::string experiment_csv_header() {
  std::string header = "schema";
  for (const Field& f : kFields) {
    header += ',';
    header += f.name;
  }
  for (const char* m : kMetricColumns) {
    header += ',';
    header += m;
  }
  return header;
}

std::string experiment_csv_row(const SimConfig& config,
                               const MetricsReport& report) {
  std::string row = kSchemaTag;
  for (const Field& f : kFields) {
    row += ',';
    row += f.get(config);
  }
  row += ',' + format_double(report.mean_common_blocks);
  row += ',' + format_double(report.mean_grant_based_blocks);
  row += ',' + format_int(report.urllc_arrived);
  row += ',' + format_int(report.urllc_lost);
  row += ',' + format_double(report.urllc_loss_prob);
  row += ',' + format_double(report.embb_arrived_bits);
  row += ',' + format_double(report.embb_lost_bits);
  row += ',' + format_double(report.embb_loss_prob);
  row += ',' + format_double(report.sample_variance);
  row += ',' + format_double(report.jain_index);
  row += ',' + format_double(report.social_payoff);
  return row;
}

std::string ExperimentResult::csv() const {
  std::string out = header + "\n";
  for (const std::string& row : rows) {
    out += row;
    out += '\n';
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.base.validate();
  const long long rows_total = spec.total_rows();
  if (rows_total > kMaxRows) {
    throw std::invalid_argument("sweep has more than 1e6 cells");
  }
  const std::vector<std::uint64_t> seeds =
      spec.seeds.empty() ? std::vector<std::uint64_t>{spec.base.seed}
                         : spec.seeds;
  const long long seed_count = static_cast<long long>(seeds.size());
  long long cells = 1;
  for (const auto& [name, values] : spec.axes) {
    cells *= static_cast<long long>(values.size());
  }

  ExperimentResult result;
  result.header = experiment_csv_header();
  result.rows.resize(static_cast<std::size_t>(rows_total));
  result.reports.resize(static_cast<std::size_t>(rows_total));

  std::atomic<long long> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const long long row = next.fetch_add(1);
      if (row >= rows_total || failed.load()) break;
      try {
        long long cell = row / seed_count;
        const long long seed_idx = row % seed_count;
        SimConfig config = spec.base;
        // Decode the cell in mixed radix, first axis slowest.
        long long radix = cells;
        for (const auto& [name, values] : spec.axes) {
          radix /= static_cast<long long>(values.size());
          const auto pick = static_cast<std::size_t>(cell / radix);
          cell %= radix;
          sim_config_set(config, name, values[pick]);
        }
        config.seed = seeds[static_cast<std::size_t>(seed_idx)];
        const MetricsReport report = run_simulation(config);
        result.rows[static_cast<std::size_t>(row)] =
            experiment_csv_row(config, report);
        result.reports[static_cast<std::size_t>(row)] = report;
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) first_error = std::current_exception();
      }
    }
  };

  const int workers = static_cast<int>(
      std::min<long long>(std::max(1, spec.threads), rows_total));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failed.load()) std::rethrow_exception(first_error);
  return result;
}

void write_text_file(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::ios_base::failure("cannot open '" + tmp + "' for writing");
    }
    out << contents;
    out.flush();
    if (!out) {
      out.close();
      std::remove(tmp.c_str());
      throw std::ios_base::failure("failed while writing '" + tmp + "'");
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::ios_base::failure("cannot move output into place at '" + path +
                                 "'");
  }
}

}  // namespace uresim
