// dassist: run, compare and serve driving-assistant sessions.
//
// Exit status: 0 on success, 2 on usage errors, 1 on runtime errors.

#include "da/live_server.hpp"
#include "da/metrics.hpp"
#include "da/session.hpp"
#include "da/trigger.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace {

using json = nlohmann::json;

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": invalid JSON: " + e.what());
  }
}

da::Scenario scenario_arg(const std::string& arg) {
  if (arg == "std" || arg == "standard") return da::build_standard_scenario();
  return da::load_scenario_file(arg);
}

struct CommonOptions {
  std::string scenario = "std";
  std::string trigger_file;
  std::string driver_file;
  std::string templates_file;
  std::string alerts_file;
  std::string message_rules_file;

  void add_to(CLI::App* cmd, bool with_driver) {
    cmd->add_option("--scenario", scenario, "Scenario JSON file, or 'std' for the standard drive");
    cmd->add_option("--trigger", trigger_file, "Trigger policy JSON file")->check(CLI::ExistingFile);
    cmd->add_option("--templates", templates_file, "Fallback template table JSON file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--alerts", alerts_file, "Baseline alert rules JSON file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--message-rules", message_rules_file, "Message validation rules JSON file")
        ->check(CLI::ExistingFile);
    if (with_driver) {
      cmd->add_option("--driver", driver_file, "Synthetic driver JSON file")
          ->check(CLI::ExistingFile);
    }
  }

  da::SessionOptions session_options() const {
    da::SessionOptions o;
    if (!trigger_file.empty()) o.trigger = da::load_trigger_policy_file(trigger_file);
    if (!templates_file.empty()) o.templates = da::load_template_table_file(templates_file);
    if (!alerts_file.empty()) o.alert_rules = da::alert_rules_from_json(read_json_file(alerts_file));
    if (!message_rules_file.empty()) {
      o.message_rules = da::message_rules_from_json(read_json_file(message_rules_file));
    }
    return o;
  }

  da::SyntheticDriverConfig driver() const {
    if (driver_file.empty()) return {};
    return da::synthetic_driver_from_json(read_json_file(driver_file));
  }
};

struct LlmOptions {
  bool mock = false;
  std::string mock_mode = "echo";
  std::string config_file;
  CLI::Option* mode_option = nullptr;

  void add_to(CLI::App* cmd) {
    cmd->add_flag("--mock-llm", mock, "Use the offline mock LLM instead of the HTTP endpoint");
    mode_option = cmd->add_option("--mock-mode", mock_mode,
                                  "Mock behaviour: echo|scripted|fail|oversize (implies --mock-llm)");
    mode_option->check(CLI::IsMember({"echo", "scripted", "fail", "oversize"}));
    cmd->add_option("--llm-config", config_file, "LLM endpoint JSON file")
        ->check(CLI::ExistingFile);
  }

  std::unique_ptr<da::LlmClient> client() const {
    if (mock || mode_option->count() > 0) return da::mock_client(da::mock_mode_from_string(mock_mode));
    da::LlmConfig cfg;
    if (!config_file.empty()) cfg = da::llm_config_from_json(read_json_file(config_file));
    return std::make_unique<da::HttpLlmClient>(cfg);
  }

  double deadline_s() const {
    if (config_file.empty()) return da::LlmConfig{}.timeout_s;
    return da::llm_config_from_json(read_json_file(config_file)).timeout_s;
  }
};

// std::vector<bool> cannot back a std::span, so labels live in a plain array.
struct Labels {
  std::unique_ptr<bool[]> data;
  std::size_t size = 0;
  std::span<const bool> span() const { return {data.get(), size}; }
};

Labels read_labels(const std::string& path) {
  const json doc = read_json_file(path);
  if (!doc.is_array()) throw std::runtime_error(path + ": expected a JSON array of labels");
  Labels out{std::make_unique<bool[]>(doc.size()), doc.size()};
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& v = doc[i];
    if (v.is_boolean()) {
      out.data[i] = v.get<bool>();
    } else if (v.is_number_integer() && (v.get<int>() == 0 || v.get<int>() == 1)) {
      out.data[i] = v.get<int>() == 1;
    } else {
      throw std::runtime_error(path + "[" + std::to_string(i) + "]: label must be true/false or 0/1");
    }
  }
  return out;
}

std::atomic<bool> g_interrupted{false};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Driving-assistant session simulator and persuasion engine"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run one session with the synthetic driver");
  CommonOptions run_common;
  LlmOptions run_llm;
  std::string run_policy = "persuasion";
  std::uint64_t run_seed = 1;
  std::string run_out;
  run_common.add_to(run, true);
  run_llm.add_to(run);
  run->add_option("--policy", run_policy, "baseline|persuasion")
      ->check(CLI::IsMember({"baseline", "persuasion"}));
  run->add_option("--seed", run_seed, "Driver seed");
  run->add_option("--out", run_out, "Output JSONL path (stdout when omitted)");

  // compare
  auto* compare = app.add_subcommand("compare", "Paired baseline vs persuasion comparison");
  CommonOptions cmp_common;
  std::size_t cmp_seeds = 50;
  std::uint64_t cmp_first = 1;
  std::string cmp_json;
  cmp_common.add_to(compare, true);
  compare->add_option("--seeds", cmp_seeds, "Number of paired seeds (>= 10)")
      ->check(CLI::Range(static_cast<std::size_t>(da::kMinComparisonSeeds),
                         static_cast<std::size_t>(1000000)));
  compare->add_option("--first-seed", cmp_first, "First seed; seeds are consecutive");
  compare->add_option("--json", cmp_json, "Also write the report as JSON to this path");

  // serve
  auto* serve = app.add_subcommand("serve", "Serve a live session over WebSocket");
  CommonOptions srv_common;
  LlmOptions srv_llm;
  std::string srv_policy = "persuasion";
  std::uint16_t srv_port = 8080;
  std::string srv_address = "127.0.0.1";
  double srv_scale = 1.0;
  std::string srv_log;
  srv_common.add_to(serve, false);
  srv_llm.add_to(serve);
  serve->add_option("--policy", srv_policy, "baseline|persuasion")
      ->check(CLI::IsMember({"baseline", "persuasion"}));
  serve->add_option("--port", srv_port, "TCP port (0 picks a free one)");
  serve->add_option("--address", srv_address, "Bind address");
  serve->add_option("--time-scale", srv_scale, "Simulated seconds per wall-clock second")
      ->check(CLI::PositiveNumber);
  serve->add_option("--log", srv_log, "Write the session log here when it ends");

  // kappa
  auto* kappa = app.add_subcommand("kappa", "Cohen's kappa between two label files");
  std::string kappa_a, kappa_b;
  kappa->add_option("--a", kappa_a, "JSON array of boolean labels")->required();
  kappa->add_option("--b", kappa_b, "JSON array of boolean labels")->required();

  // validate-scenario
  auto* validate = app.add_subcommand("validate-scenario", "Check a scenario file");
  std::string validate_path;
  validate->add_option("file", validate_path, "Scenario JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*run) {
      const auto scenario = scenario_arg(run_common.scenario);
      const auto llm = run_llm.client();
      const auto log = da::run_session(scenario, da::policy_kind_from_string(run_policy),
                                       run_common.driver(), *llm, run_seed,
                                       run_common.session_options());
      if (run_out.empty()) {
        std::cout << log.to_jsonl();
      } else {
        log.write(run_out);
        const auto counts = da::count_secondary_tasks(log);
        std::printf("wrote %s (%zu records, %d persuasions)\n", run_out.c_str(),
                    log.records().size(), counts.persuasion_count);
      }
    } else if (*compare) {
      const auto scenario = scenario_arg(cmp_common.scenario);
      std::vector<std::uint64_t> seeds(cmp_seeds);
      std::iota(seeds.begin(), seeds.end(), cmp_first);
      const auto report = da::compare_policies(scenario, cmp_common.driver(), seeds,
                                               cmp_common.session_options());
      std::cout << report.to_table();
      if (!cmp_json.empty()) {
        std::ofstream out(cmp_json, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open '" + cmp_json + "' for writing");
        out << report.to_json().dump(2) << '\n';
      }
    } else if (*serve) {
      da::LiveConfig cfg;
      cfg.scenario = scenario_arg(srv_common.scenario);
      cfg.policy = da::policy_kind_from_string(srv_policy);
      cfg.options = srv_common.session_options();
      cfg.address = srv_address;
      cfg.port = srv_port;
      cfg.time_scale = srv_scale;
      cfg.llm_deadline_s = srv_llm.deadline_s();
      cfg.log_path = srv_log;
      da::LiveServer server(std::move(cfg), std::shared_ptr<da::LlmClient>(srv_llm.client()));
      server.start();
      std::printf("serving on ws://%s:%u\n", srv_address.c_str(),
                  static_cast<unsigned>(server.port()));
      std::fflush(stdout);
      std::signal(SIGINT, [](int) { g_interrupted = true; });
      std::signal(SIGTERM, [](int) { g_interrupted = true; });
      std::thread watcher([&server] {
        while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        server.stop();
      });
      server.wait();
      g_interrupted = true;
      watcher.join();
    } else if (*kappa) {
      const auto a = read_labels(kappa_a);
      const auto b = read_labels(kappa_b);
      if (a.size != b.size) {
        throw std::runtime_error("label files differ in length (" + std::to_string(a.size) +
                                 " vs " + std::to_string(b.size) + ")");
      }
      std::printf("%.3f\n", da::cohen_kappa(a.span(), b.span()));
    } else if (*validate) {
      const auto scenario = da::load_scenario_file(validate_path);
      std::printf("ok: '%s', %zu sections, %.1f s\n", scenario.name.c_str(),
                  scenario.sections.size(), scenario.total_duration());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
