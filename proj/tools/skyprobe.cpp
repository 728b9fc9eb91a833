// skyprobe: feature extraction, training, evaluation, and the detection
// pipeline (trigger, siem, probe) behind one binary.
//
// Exit codes: 0 ok, 1 failed expectation, 2 input error, 3 degenerate data,
// 64 usage.

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "skyprobe/bundle.hpp"
#include "skyprobe/dataset.hpp"
#include "skyprobe/errors.hpp"
#include "skyprobe/features.hpp"
#include "skyprobe/flows.hpp"
#include "skyprobe/pcap.hpp"
#include "skyprobe/probe.hpp"
#include "skyprobe/report.hpp"
#include "skyprobe/scenario.hpp"
#include "skyprobe/siem_server.hpp"
#include "skyprobe/synth.hpp"
#include "skyprobe/trigger.hpp"

namespace {

using namespace skyprobe;

enum Exit : int { kOk = 0, kAssertion = 1, kInput = 2, kDegenerate = 3, kUsage = 64 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
}

// SOURCE_DATE_EPOCH keeps model files reproducible; without it the epoch is used.
std::string training_timestamp() {
  std::time_t t = 0;
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) t = static_cast<std::time_t>(std::strtoll(env, nullptr, 10));
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

TimeZone parse_zone(const std::string& text) {
  auto tz = TimeZone::parse(text);
  if (!tz) throw UsageError("unknown time zone '" + text + "'");
  return *tz;
}

// ---------------------------------------------------------------- extract

struct ExtractArgs {
  std::string pcap, label, out = "-";
  double timeout = 60;
};

int cmd_extract(const ExtractArgs& a) {
  if (a.label.empty()) throw UsageError("--label is required");
  const auto label = parse_label(a.label);
  if (!label) throw UsageError("--label must be skype or normal");
  const DecodedCapture cap = read_capture_file(a.pcap);
  const auto flows = assemble_flows(cap.packets, a.timeout);
  std::string csv = std::string(kFeatureCsvHeader) + "\n";
  std::size_t rows = 0;
  for (const auto& f : flows) {
    if (f.packet_count() < 2) continue;
    csv += format_feature_row(extract_features(f), to_string(*label)) + "\n";
    ++rows;
  }
  write_text(a.out, csv);
  std::cerr << "packets " << cap.packets.size() << " skipped " << cap.skipped << " flows " << flows.size()
            << " rows " << rows << "\n";
  return kOk;
}

// ------------------------------------------------------------------ train

struct TrainArgs {
  std::string dataset, out_dir;
  std::uint64_t seed = 1;
  double train_fraction = 2.0 / 3.0;
  double r_th = 1.0;
  std::size_t min_leaf = 2;
  int max_parents = 3;
};

int cmd_train(const TrainArgs& a) {
  const LabeledDataset ds = load_dataset_file(a.dataset);
  ds.require_trainable();
  const Split split = stratified_split(ds, a.train_fraction, a.seed);
  TrainConfig cfg;
  cfg.tree.min_leaf = a.min_leaf;
  cfg.bayesnet.max_parents = a.max_parents;
  ModelBundle bundle;
  bundle.models = train_all(split.train, cfg);
  bundle.threshold = calibrate_threshold(split.test, Ensemble(bundle.models), a.r_th);
  bundle.meta = {split.train.size(), a.seed, training_timestamp()};
  save_model_dir(a.out_dir, bundle);

  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(6);
  os << "train " << split.train.size() << " validation " << split.test.size() << "\n"
     << "auc_th " << bundle.threshold.auc_th << "\n"
     << "r_th " << bundle.threshold.r_th << "\n";
  std::cout << os.str();
  return kOk;
}

// ------------------------------------------------------------------- eval

struct EvalArgs {
  std::string dataset, models, report = "-", csv, roc, scatter;
};

int cmd_eval(const EvalArgs& a) {
  const LabeledDataset ds = load_dataset_file(a.dataset);
  ds.require_trainable();
  const ModelBundle bundle = load_model_dir(a.models);
  const Evaluation ev = evaluate(ds, Ensemble(bundle.models));
  write_text(a.report, format_report_table(ev));
  if (!a.csv.empty()) write_text(a.csv, report_csv(ev));
  if (!a.roc.empty()) write_text(a.roc, roc_csv(ev));
  if (!a.scatter.empty()) write_text(a.scatter, scatter_csv(ev));
  return kOk;
}

// --------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string scenario, transport = "memory";
  bool quiet = false;
};

int cmd_simulate(const SimulateArgs& a) {
  const ScenarioScript script = load_scenario_file(a.scenario);
  const auto transport = a.transport == "tcp" ? ScenarioTransport::Tcp : ScenarioTransport::Memory;
  const ScenarioResult r = run_scenario(script, transport);
  for (const auto& line : r.transcript)
    if (!a.quiet || line.starts_with("PASS") || line.starts_with("FAIL") || line.starts_with("  observed"))
      std::cout << line << "\n";
  std::cout << (r.passed ? "scenario passed" : "scenario FAILED at line " + std::to_string(r.failed_line)) << "\n";
  return r.passed ? kOk : kAssertion;
}

// ------------------------------------------------------------------ serve

struct ServeArgs {
  std::string bind = "127.0.0.1", directives, assets, store;
  std::uint16_t port = kControlPort;
  int syslog_port = 514;
  int admin_port = -1;
  std::vector<std::string> tail;
  double r_th = 1.0;
  double duration = 0;
};

int cmd_serve(const ServeArgs& a) {
  auto directives = a.directives.empty() ? default_directives() : load_directives_file(a.directives);
  AssetTable assets = a.assets.empty() ? AssetTable() : AssetTable::load_file(a.assets);
  CorrelationConfig cc;
  cc.r_th = a.r_th;
  std::unique_ptr<EventStore> store;
  if (!a.store.empty()) store = std::make_unique<EventStore>(a.store);
  SiemCore core(CorrelationEngine(std::move(directives), std::move(assets), cc), store.get());

  SiemServerConfig sc;
  sc.bind_host = a.bind;
  sc.control_port = a.port;
  if (a.syslog_port >= 0) sc.syslog_port = static_cast<std::uint16_t>(a.syslog_port);
  if (a.admin_port >= 0) sc.admin_port = static_cast<std::uint16_t>(a.admin_port);
  sc.tail_files = a.tail;
  SiemServer server(sc, core);
  server.start();
  std::cerr << "siem: control " << a.bind << ":" << server.control_port();
  if (sc.syslog_port) std::cerr << " syslog udp " << server.syslog_port();
  if (sc.admin_port) std::cerr << " admin " << server.admin_port();
  std::cerr << "\n";

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const auto until = std::chrono::steady_clock::now() + std::chrono::duration<double>(a.duration);
  while (!g_interrupted && !server.failed() && (a.duration <= 0 || std::chrono::steady_clock::now() < until))
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.drain();
  server.stop();
  std::cout << core.status_text();
  return server.failed() ? kInput : kOk;
}

// ------------------------------------------------------------------ probe

struct ProbeArgs {
  std::string server = "127.0.0.1:40001", models, syslog = "udp:127.0.0.1:514", pcap = "-", tz = "UTC";
  double window = 300;
  double auc_th = -1;
  std::vector<std::string> activate;
  double wait_activation = 0;
  bool offline = false;
};

int cmd_probe(const ProbeArgs& a) {
  const ModelBundle bundle = load_model_dir(a.models);
  ProbeConfig cfg;
  const HostPort hp = parse_host_port(a.server, kControlPort);
  cfg.server_host = hp.host;
  cfg.server_port = hp.port;
  cfg.window_seconds = a.window;
  cfg.threshold = bundle.threshold;
  if (a.auc_th >= 0) cfg.threshold.auc_th = a.auc_th;
  cfg.tz = parse_zone(a.tz);
  cfg.validate();

  auto sink = make_syslog_sink(a.syslog);
  ProbeRuntime runtime(std::make_shared<Ensemble>(bundle.models), cfg, *sink);
  for (const auto& ip : a.activate) activate(runtime.hosts(), ip);
  if (!a.offline) {
    runtime.attach(connect_to_siem(cfg));
    std::cerr << "probe: connected to " << cfg.server_host << ":" << cfg.server_port << "\n";
    const auto until = std::chrono::steady_clock::now() + std::chrono::duration<double>(a.wait_activation);
    while (runtime.hosts().empty() && std::chrono::steady_clock::now() < until && !g_interrupted)
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }

  std::size_t skipped = 0;
  auto feed = [&](const PacketMeta& p) { runtime.ingest(p); };
  if (a.pcap == "-") {
    skipped = stream_packets(std::cin, feed);
  } else {
    std::ifstream in(a.pcap, std::ios::binary);
    if (!in) throw MalformedCapture("cannot open capture '" + a.pcap + "'");
    skipped = stream_packets(in, feed);
  }
  runtime.finish();
  runtime.stop();
  std::size_t fired = 0;
  for (const auto& v : runtime.verdicts()) {
    fired += v.fired ? 1 : 0;
    std::cout << "verdict host=" << v.host.to_string() << " flows=" << v.flows_total << " skype=" << v.flows_skype
              << " score=" << v.score << " fired=" << (v.fired ? "true" : "false") << "\n";
  }
  std::cerr << "probe: skipped " << skipped << " record(s), " << fired << " window(s) fired\n";
  return kOk;
}

// ---------------------------------------------------------------- trigger

struct TriggerArgs {
  std::string pcap, rules, syslog = "-", tz = "UTC";
};

int cmd_trigger(const TriggerArgs& a) {
  TriggerEngine engine(a.rules.empty() ? default_rules() : load_rules_file(a.rules));
  const TimeZone tz = parse_zone(a.tz);
  const DecodedCapture cap = read_capture_file(a.pcap);
  std::unique_ptr<SyslogSink> sink;
  if (a.syslog != "-") sink = make_syslog_sink(a.syslog);
  std::size_t n = 0;
  for (const auto& ev : engine.scan(cap.packets)) {
    const std::string line = emit_trigger_syslog(ev, tz);
    if (sink)
      sink->emit(line);
    else
      std::cout << line << "\n";
    ++n;
  }
  std::cerr << "trigger: " << n << " event(s) from " << cap.packets.size() << " packet(s)\n";
  return kOk;
}

// -------------------------------------------------------------------- gen

struct GenArgs {
  std::string what, out, host = "192.168.1.200", kind = "session";
  std::size_t n = 1292, flows = 12;
  std::uint64_t seed = 1;
  std::int64_t start = 1485800700;
};

int cmd_gen(const GenArgs& a) {
  if (a.what == "corpus") {
    const LabeledDataset ds = generate_corpus(a.n, a.seed);
    write_text(a.out, to_csv(ds));
    return kOk;
  }
  const Ipv4Addr host = Ipv4Addr::from_string(a.host);
  const TimestampUs t0 = a.start * 1'000'000;
  std::vector<std::vector<PacketMeta>> parts;
  if (a.kind == "session" || a.kind == "login") parts.push_back({login_packet(host, t0)});
  if (a.kind == "session" || a.kind == "skype")
    parts.push_back(generate_traffic(ClassLabel::Skype, host, a.flows, t0 + 5'000'000, a.seed));
  if (a.kind == "normal") parts.push_back(generate_traffic(ClassLabel::Normal, host, a.flows, t0, a.seed));
  if (parts.empty()) throw UsageError("--kind must be session, login, skype or normal");
  if (a.out == "-") throw UsageError("captures need --out <file>");
  write_capture_file(a.out, merge_by_time(std::move(parts)));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skype-like traffic detection toolkit"};
  app.require_subcommand(1);

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Flow features of a capture as CSV");
  extract->add_option("--pcap", ex.pcap, "Input capture")->required();
  extract->add_option("--label", ex.label, "Class label for every row (skype|normal)");
  extract->add_option("--out", ex.out, "Output CSV ('-' for stdout)");
  extract->add_option("--timeout", ex.timeout, "Flow idle timeout in seconds");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train the three models and calibrate AUC_th");
  train->add_option("--dataset", tr.dataset)->required();
  train->add_option("--out-dir", tr.out_dir)->required();
  train->add_option("--seed", tr.seed);
  train->add_option("--train-fraction", tr.train_fraction)->check(CLI::Range(0.05, 0.95));
  train->add_option("--r-th", tr.r_th)->check(CLI::Range(0.0, 10.0));
  train->add_option("--min-leaf", tr.min_leaf)->check(CLI::PositiveNumber);
  train->add_option("--max-parents", tr.max_parents)->check(CLI::Range(1, 8));

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Classification report, ROC and error scatter");
  eval->add_option("--dataset", ev.dataset)->required();
  eval->add_option("--models", ev.models)->required();
  eval->add_option("--report", ev.report, "Table output ('-' for stdout)");
  eval->add_option("--csv", ev.csv, "Report as CSV");
  eval->add_option("--roc", ev.roc, "ROC points CSV");
  eval->add_option("--scatter", ev.scatter, "Per-instance error scatter CSV");

  SimulateArgs si;
  auto* simulate = app.add_subcommand("simulate", "Replay a scenario script end to end");
  simulate->add_option("--scenario", si.scenario)->required();
  simulate->add_option("--transport", si.transport)->check(CLI::IsMember({"memory", "tcp"}));
  simulate->add_flag("--quiet", si.quiet, "Print only expectation results");

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "Run the SIEM server");
  serve->add_option("--bind", sv.bind);
  serve->add_option("--port", sv.port, "Probe control port");
  serve->add_option("--syslog-port", sv.syslog_port, "UDP syslog port (-1 disables)");
  serve->add_option("--admin-port", sv.admin_port, "Status port (-1 disables)");
  serve->add_option("--tail", sv.tail, "Syslog file to follow (repeatable)");
  serve->add_option("--directives", sv.directives);
  serve->add_option("--assets", sv.assets);
  serve->add_option("--store", sv.store, "JSON-lines event/alarm store");
  serve->add_option("--r-th", sv.r_th)->check(CLI::Range(0.0, 10.0));
  serve->add_option("--duration", sv.duration, "Seconds to run (0: until interrupted)");

  ProbeArgs pr;
  auto* probe = app.add_subcommand("probe", "Run the detection probe over a capture stream");
  probe->add_option("--server", pr.server, "SIEM control address host:port");
  probe->add_option("--models", pr.models)->required();
  probe->add_option("--window", pr.window, "Window length in seconds")->check(CLI::PositiveNumber);
  probe->add_option("--auc-th", pr.auc_th, "Firing threshold (default: from threshold.json)");
  probe->add_option("--syslog", pr.syslog, "udp:host[:port] or file:path");
  probe->add_option("--pcap", pr.pcap, "Capture file or '-' for stdin");
  probe->add_option("--tz", pr.tz);
  probe->add_option("--activate", pr.activate, "Pre-activated host (repeatable)");
  probe->add_option("--wait-activation", pr.wait_activation, "Seconds to wait for an activation");
  probe->add_flag("--offline", pr.offline, "Do not connect to a SIEM");

  TriggerArgs tg;
  auto* trigger = app.add_subcommand("trigger", "Scan a capture for login signatures");
  trigger->add_option("--pcap", tg.pcap)->required();
  trigger->add_option("--rules", tg.rules);
  trigger->add_option("--syslog", tg.syslog, "'-' for stdout, udp:host[:port] or file:path");
  trigger->add_option("--tz", tg.tz);

  GenArgs gn;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic corpus or capture");
  gen->add_option("what", gn.what)->required()->check(CLI::IsMember({"corpus", "capture"}));
  gen->add_option("--out", gn.out)->required();
  gen->add_option("--n", gn.n, "Corpus size");
  gen->add_option("--seed", gn.seed);
  gen->add_option("--kind", gn.kind, "Capture kind: session, login, skype, normal");
  gen->add_option("--host", gn.host);
  gen->add_option("--flows", gn.flows);
  gen->add_option("--start", gn.start, "Capture start, unix seconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*extract) return cmd_extract(ex);
    if (*train) return cmd_train(tr);
    if (*eval) return cmd_eval(ev);
    if (*simulate) return cmd_simulate(si);
    if (*serve) return cmd_serve(sv);
    if (*probe) return cmd_probe(pr);
    if (*trigger) return cmd_trigger(tg);
    if (*gen) return cmd_gen(gn);
  } catch (const UsageError& e) {
    std::cerr << "skyprobe: " << e.what() << "\n";
    return kUsage;
  } catch (const SingleClass& e) {
    std::cerr << "skyprobe: degenerate data: " << e.what() << "\n";
    return kDegenerate;
  } catch (const DatasetEmpty& e) {
    std::cerr << "skyprobe: degenerate data: " << e.what() << "\n";
    return kDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "skyprobe: " << e.what() << "\n";
    return kInput;
  }
  return kUsage;
}
