#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace skyprobe {

// One line of a scenario script, split into whitespace-separated words.
struct ScenarioStep {
  std::size_t line = 0;
  std::string text;                 // the line as written, trimmed
  std::vector<std::string> words;   // words[0] is the verb
  bool operator==(const ScenarioStep&) const = default;
};

struct ScenarioScript {
  std::string base_dir;  // relative paths resolve against this
  std::vector<ScenarioStep> steps;
};

// Line-oriented script; '#' at the start of a word begins a comment. Verbs:
//   timezone <ZONE>            window <seconds>      auc-th <x>     r-th <x>
//   start <unix-seconds>       directives <path>     assets <path>  asset <ip> <value>
//   rules <path>               models <dir> | models synthetic [n=N] [seed=S]
//   inject login host=<ip> [at=+S]
//   inject udp-probe host=<ip> [at=+S]
//   inject synth skype|normal host=<ip> flows=N [at=+S] [seed=S] [spacing=S]
//   inject capture <path>
//   advance <+S>               flush
//   expect syslog <text>       expect no-syslog <text>
//   expect alarm directive=<id> [risk=<r>] [host=<ip>]      expect no-alarm [directive=<id>]
//   expect activation <ip>     expect no-activation
//   expect verdict host=<ip> [fired=true|false] [flows=N] [skype=N]
//   expect classified none|<N>
// Unknown verbs and malformed expectations throw ScenarioError at parse time.
ScenarioScript parse_scenario(std::string_view text, std::string base_dir = ".");
ScenarioScript load_scenario_file(const std::string& path);

enum class ScenarioTransport { Memory, Tcp };

struct ScenarioResult {
  bool passed = false;
  std::size_t failed_line = 0;  // 0 when passed
  std::vector<std::string> transcript;
};

// Runs trigger, siem and probe in one process. Packets are processed one at a
// time: trigger match, siem correlation (and synchronous probe activation),
// then probe ingest. Stops at the first failed expectation.
ScenarioResult run_scenario(const ScenarioScript& script, ScenarioTransport transport = ScenarioTransport::Memory);

}  // namespace skyprobe
