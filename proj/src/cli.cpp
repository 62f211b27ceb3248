#include "thir/cli.hpp"

#include "thir/dataset.hpp"
#include "thir/error.hpp"
#include "thir/eval.hpp"
#include "thir/index.hpp"
#include "thir/retrieval.hpp"
#include "thir/service.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace thir {

namespace fs = std::filesystem;

namespace {

std::shared_ptr<spdlog::logger> make_logger(const std::string& level_name) {
  auto logger = spdlog::get("thir");
  if (!logger) logger = spdlog::stderr_logger_mt("thir");
  logger->set_pattern("[%l] %v");
  const auto level = spdlog::level::from_str(level_name);
  logger->set_level(level == spdlog::level::off && level_name != "off" ? spdlog::level::warn : level);
  return logger;
}

RangePolicy parse_range(const std::string& s) {
  return s == "full" ? RangePolicy::FixedFullScale : RangePolicy::PerChannelMinMax;
}

struct Globals {
  int jobs = 1;
  std::string log_level;
};

struct ExtractArgs {
  fs::path data;
  std::optional<fs::path> manifest;
  fs::path out;
  int resolution = 200;
  int width = 240;
  int height = 240;
  std::string range = "per-image";
  bool lenient = false;
};

struct QueryArgs {
  fs::path index;
  fs::path image;
  int k = 5;
  std::string format = "table";
  bool normalize = false;
};

struct EvaluateArgs {
  fs::path data;
  std::optional<fs::path> manifest;
  std::vector<int> ks = {3, 5};
  double split = 0.8;
  std::uint64_t seed = 42;
  std::string magnification = "all";
  int resolution = 200;
  int width = 240;
  int height = 240;
  std::string range = "per-image";
  std::optional<fs::path> report;
  std::string format = "csv";
};

struct CurvesArgs {
  fs::path image;
  int resolution = 200;
  int width = 240;
  int height = 240;
  std::string range = "per-image";
  std::optional<fs::path> out;
  std::optional<fs::path> diagram;
  std::string format = "csv";
};

struct ServeArgs {
  fs::path index;
  fs::path data_root;
  std::string addr = "127.0.0.1:8080";
  std::optional<fs::path> console;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

int do_extract(const ExtractArgs& a, const Globals& g, std::ostream& out, spdlog::logger& log) {
  const auto records = scan_dataset(a.data, a.manifest);
  log.info("found {} images under {}", records.size(), a.data.string());
  BuildOptions opts;
  opts.root = a.data;
  opts.workers = g.jobs;
  opts.lenient = a.lenient;
  const auto result = build_index(records, {a.resolution, parse_range(a.range)}, {a.width, a.height}, opts);
  for (const auto& s : result.skipped) log.warn("skipped {}", s);
  save_index(result.index, a.out);
  out << "indexed " << result.index.size() << " entries -> " << a.out.string() << '\n';
  return kExitOk;
}

int do_query(const QueryArgs& a, std::ostream& out) {
  const auto ix = load_index(a.index);
  const auto response = query_response(ix, load_image(a.image), a.k, a.normalize);
  if (a.format == "json") {
    out << response.dump(2) << '\n';
    return kExitOk;
  }
  int rank = 1;
  for (const auto& r : response["results"]) {
    const auto id = r["id"].get<std::uint32_t>();
    out << fmt::format("{}\t{}\t{:.6f}\t{}\t{}\t{}\n", rank++, id, r["distance"].get<double>(),
                       r["label"].get<std::string>(), r["magnification"].get<int>(),
                       ix.records[id].path.generic_string());
  }
  return kExitOk;
}

int do_evaluate(const EvaluateArgs& a, const Globals& g, std::ostream& out, spdlog::logger& log) {
  auto records = scan_dataset(a.data, a.manifest);
  std::erase_if(records, [](const DatasetRecord& r) { return r.label == Label::Unknown; });
  if (records.empty()) throw Error(ErrorKind::EmptyDataset, "no benign/malignant records to evaluate");

  std::map<std::string, std::vector<DatasetRecord>> groups;
  for (const auto& rec : records) {
    const auto mag = to_string(rec.magnification);
    if (a.magnification == "all" || a.magnification == mag) groups[mag].push_back(rec);
  }
  if (groups.empty()) throw Error(ErrorKind::EmptyDataset, "no records at magnification " + a.magnification);

  const BettiCurveSpec spec{a.resolution, parse_range(a.range)};
  SplitSpec split_spec;
  split_spec.train_fraction = a.split;
  split_spec.seed = a.seed;

  EvalReport report;
  report.train_fraction = a.split;
  report.seed = a.seed;
  report.spec = spec;
  // Numeric magnifications first, in ascending order.
  std::vector<std::string> order;
  for (const auto& [mag, _] : groups) order.push_back(mag);
  std::sort(order.begin(), order.end(), [](const std::string& x, const std::string& y) {
    const bool nx = std::isdigit(static_cast<unsigned char>(x[0])) != 0;
    const bool ny = std::isdigit(static_cast<unsigned char>(y[0])) != 0;
    if (nx != ny) return nx;
    return nx ? std::stoi(x) < std::stoi(y) : x < y;
  });
  for (const auto& mag : order) {
    // Dense ids within the group keep index ids meaningful.
    auto group = groups[mag];
    for (std::size_t i = 0; i < group.size(); ++i) group[i].id = static_cast<std::uint32_t>(i);
    const auto parts = split(group, split_spec);
    log.info("magnification {}: {} train / {} test", mag, parts.train.size(), parts.test.size());
    BuildOptions opts;
    opts.root = a.data;
    opts.workers = g.jobs;
    const auto train = build_index(parts.train, spec, {a.width, a.height}, opts).index;
    EvalOptions eopts;
    eopts.root = a.data;
    eopts.workers = g.jobs;
    eopts.magnification = mag;
    auto part = evaluate(train, parts.test, a.ks, spec, eopts);
    for (auto& row : part.rows) report.rows.push_back(std::move(row));
  }

  const auto format = a.format == "markdown" ? ReportFormat::Markdown
                      : a.format == "json"   ? ReportFormat::Json
                                             : ReportFormat::Csv;
  const auto text = render_report(report, format);
  if (a.report) write_text(*a.report, text);
  out << text;
  return kExitOk;
}

constexpr const char* kChannelNames[] = {"R", "G", "B"};

int do_curves(const CurvesArgs& a, std::ostream& out) {
  const BettiCurveSpec spec{a.resolution, parse_range(a.range)};
  const auto img = resize(load_image(a.image), a.width, a.height);
  const auto channels = split_channels<double>(img);

  std::ostringstream curves_text;
  nlohmann::json curves_json = {{"resolution", spec.resolution}, {"range", to_string(spec.range_policy)},
                                {"channels", nlohmann::json::array()}};
  std::ostringstream diagram_text;
  diagram_text << "channel,dim,birth,death\n";
  if (a.format == "csv") curves_text << "channel,sample_index,filtration_value,count\n";

  for (int c = 0; c < 3; ++c) {
    const auto dgm = compute_persistence(build_filtration(channels[c])).sorted();
    const auto curve = betti_curve(dgm, spec);
    nlohmann::json ch = {{"channel", kChannelNames[c]}, {"samples", nlohmann::json::array()},
                         {"counts", nlohmann::json::array()}};
    for (int j = 0; j < spec.resolution; ++j) {
      if (a.format == "csv") {
        curves_text << fmt::format("{},{},{},{}\n", kChannelNames[c], j, curve.samples(j), curve.counts(j));
      }
      ch["samples"].push_back(curve.samples(j));
      ch["counts"].push_back(curve.counts(j));
    }
    curves_json["channels"].push_back(std::move(ch));
    for (const auto& p : dgm.pairs) {
      diagram_text << fmt::format("{},{},{},{}\n", kChannelNames[c], p.dim, p.birth,
                                  p.essential() ? std::string("inf") : fmt::format("{}", p.death));
    }
  }
  const std::string text = a.format == "json" ? curves_json.dump(2) + "\n" : curves_text.str();
  if (a.out) {
    write_text(*a.out, text);
  } else {
    out << text;
  }
  if (a.diagram) write_text(*a.diagram, diagram_text.str());
  return kExitOk;
}

int do_serve(const ServeArgs& a, std::ostream& out, spdlog::logger& log) {
  const auto colon = a.addr.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorKind::InvalidArgument, "--addr must be HOST:PORT");
  const auto host = a.addr.substr(0, colon);
  const int port = std::stoi(a.addr.substr(colon + 1));
  auto ix = load_index(a.index);
  log.info("loaded {} entries from {}", ix.size(), a.index.string());
  RetrievalService service(std::move(ix), {a.data_root, a.console});
  out << "listening on http://" << a.addr << '\n' << std::flush;
  if (!service.listen(host, port)) throw Error(ErrorKind::IoError, "cannot listen on " + a.addr);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Topological fingerprinting and retrieval of RGB images", "thir"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  const char* env_level = std::getenv("THIR_LOG");
  g.log_level = env_level ? env_level : "warn";
  app.add_option("--jobs,-j", g.jobs, "Worker threads for extraction")->check(CLI::PositiveNumber);
  app.add_option("--log-level", g.log_level, "error|warn|info|debug (default from THIR_LOG)")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));

  const auto range_check = CLI::IsMember({"per-image", "full"});

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Fingerprint a dataset into a .thir index");
  extract->add_option("--data", ex.data, "Dataset root")->required()->check(CLI::ExistingDirectory);
  extract->add_option("--manifest", ex.manifest, "CSV path,label,magnification")->check(CLI::ExistingFile);
  extract->add_option("--out", ex.out, "Output index file")->required();
  extract->add_option("--resolution", ex.resolution, "Betti curve samples per channel")->check(CLI::Range(1, 65535));
  extract->add_option("--width", ex.width)->check(CLI::Range(1, 65535));
  extract->add_option("--height", ex.height)->check(CLI::Range(1, 65535));
  extract->add_option("--range", ex.range, "per-image|full")->check(range_check);
  extract->add_flag("--lenient", ex.lenient, "Skip unreadable images");

  QueryArgs q;
  auto* query = app.add_subcommand("query", "Retrieve the top-K most similar indexed images");
  query->add_option("--index", q.index)->required()->check(CLI::ExistingFile);
  query->add_option("--image", q.image)->required()->check(CLI::ExistingFile);
  query->add_option("--k", q.k)->check(CLI::PositiveNumber);
  query->add_option("--format", q.format)->check(CLI::IsMember({"table", "json"}));
  query->add_flag("--normalize", q.normalize, "Compare unit-length descriptors");

  EvaluateArgs ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Split, retrieve and score per magnification");
  evaluate_cmd->add_option("--data", ev.data)->required()->check(CLI::ExistingDirectory);
  evaluate_cmd->add_option("--manifest", ev.manifest)->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--k", ev.ks, "Comma-separated K values")->delimiter(',')->check(CLI::PositiveNumber);
  evaluate_cmd->add_option("--split", ev.split, "Training fraction in (0, 1)")
      ->check(CLI::Validator(
          [](std::string& s) -> std::string {
            double v = 0.0;
            if (!CLI::detail::lexical_cast(s, v) || !(v > 0.0 && v < 1.0)) return "must lie strictly between 0 and 1";
            return {};
          },
          "FRACTION"));
  evaluate_cmd->add_option("--seed", ev.seed);
  evaluate_cmd->add_option("--magnification", ev.magnification)
      ->check(CLI::IsMember({"40", "100", "200", "400", "all"}));
  evaluate_cmd->add_option("--resolution", ev.resolution)->check(CLI::Range(1, 65535));
  evaluate_cmd->add_option("--width", ev.width)->check(CLI::Range(1, 65535));
  evaluate_cmd->add_option("--height", ev.height)->check(CLI::Range(1, 65535));
  evaluate_cmd->add_option("--range", ev.range)->check(range_check);
  evaluate_cmd->add_option("--report", ev.report, "Also write the report here");
  evaluate_cmd->add_option("--format", ev.format)->check(CLI::IsMember({"csv", "markdown", "json"}));

  CurvesArgs cv;
  auto* curves = app.add_subcommand("curves", "Export per-channel Betti curves and diagrams");
  curves->add_option("--image", cv.image)->required()->check(CLI::ExistingFile);
  curves->add_option("--resolution", cv.resolution)->check(CLI::Range(1, 65535));
  curves->add_option("--width", cv.width)->check(CLI::Range(1, 65535));
  curves->add_option("--height", cv.height)->check(CLI::Range(1, 65535));
  curves->add_option("--range", cv.range)->check(range_check);
  curves->add_option("--out", cv.out, "Curve output (stdout when omitted)");
  curves->add_option("--diagram", cv.diagram, "Raw persistence pairs as CSV");
  curves->add_option("--format", cv.format)->check(CLI::IsMember({"csv", "json"}));

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "Serve the retrieval HTTP API");
  serve->add_option("--index", sv.index)->required()->check(CLI::ExistingFile);
  serve->add_option("--data-root", sv.data_root)->required()->check(CLI::ExistingDirectory);
  serve->add_option("--addr", sv.addr, "HOST:PORT");
  serve->add_option("--console", sv.console, "Directory with the built query console")->check(CLI::ExistingDirectory);

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.push_back("thir");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  auto log = make_logger(g.log_level);
  try {
    if (*extract) return do_extract(ex, g, out, *log);
    if (*query) return do_query(q, out);
    if (*evaluate_cmd) return do_evaluate(ev, g, out, *log);
    if (*curves) return do_curves(cv, out);
    if (*serve) return do_serve(sv, out, *log);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace thir
