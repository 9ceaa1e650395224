#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crof/adapter.hpp"
#include "crof/dataset.hpp"
#include "crof/embedding_store.hpp"
#include "crof/error.hpp"
#include "crof/label_weighting.hpp"
#include "crof/prompt_fusion.hpp"
#include "crof/text_format.hpp"
#include "crof/trainer.hpp"

#ifndef CROF_VERSION
#define CROF_VERSION "0.0.0"
#endif

namespace crof::cli {
namespace {

namespace fs = std::filesystem;
using KeyValues = std::map<std::string, std::string>;

// ---- value conversion shared by config files and manifests ---------------

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, ',')) {
    const auto first = cur.find_first_not_of(' ');
    const auto last = cur.find_last_not_of(' ');
    if (first != std::string::npos) parts.push_back(cur.substr(first, last - first + 1));
  }
  return parts;
}

void parse_value(const std::string& key, const std::string& text, std::string& out) { out = text; }

void parse_value(const std::string& key, const std::string& text, double& out) {
  out = kv_double({{key, text}}, key);
}

void parse_value(const std::string& key, const std::string& text, std::size_t& out) {
  out = kv_size({{key, text}}, key);
}

void parse_value(const std::string& key, const std::string& text, bool& out) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") {
    out = true;
  } else if (text == "false" || text == "0" || text == "no" || text == "off") {
    out = false;
  } else {
    fail(ErrorKind::kConfig, "key '" + key + "' is not a boolean: '" + text + "'");
  }
}

template <typename T>
void parse_value(const std::string& key, const std::string& text, std::vector<T>& out) {
  out.clear();
  for (const auto& part : split_list(text)) {
    T v{};
    parse_value(key, part, v);
    out.push_back(v);
  }
}

std::string to_text(const std::string& v) { return v; }
std::string to_text(double v) { return format_number(v); }
std::string to_text(std::size_t v) { return std::to_string(v); }
std::string to_text(bool v) { return v ? "true" : "false"; }
template <typename T>
std::string to_text(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ',';
    out += to_text(v[i]);
  }
  return out;
}

std::string normalize_key(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

// Declares a subcommand's options. Values from the active config file are
// applied to the bound variables before CLI11 sees the command line, so the
// precedence is defaults < config < flags and --help shows the effective
// defaults.
class Binder {
 public:
  Binder(CLI::App* app, const KeyValues* config) : app_(app), config_(config) {
    app_->add_option("--config", config_path_,
                     "Config file of `key = value` lines; flags override it");
  }

  template <typename T>
  CLI::Option* option(const std::string& name, T& var, const std::string& help) {
    apply(name, var);
    getters_.emplace_back(name, [&var] { return to_text(var); });
    CLI::Option* opt = app_->add_option("--" + name, var, help)->capture_default_str();
    if constexpr (requires { var.push_back(typename T::value_type{}); }) {
      if constexpr (!std::is_same_v<T, std::string>) opt->delimiter(',');
    }
    return opt;
  }

  /// Like option(), but required unless the config file already supplied it.
  template <typename T>
  CLI::Option* required(const std::string& name, T& var, const std::string& help) {
    CLI::Option* opt = option(name, var, help);
    if (!used_.contains(name)) opt->required();
    return opt;
  }

  CLI::Option* flag(const std::string& name, bool& var, const std::string& help) {
    apply(name, var);
    getters_.emplace_back(name, [&var] { return to_text(var); });
    return app_->add_flag("--" + name, var, help)->capture_default_str();
  }

  /// Rejects config keys that name no option of this subcommand.
  void finish() const {
    if (config_ == nullptr) return;
    for (const auto& [key, value] : *config_) {
      if (!used_.contains(normalize_key(key))) {
        fail(ErrorKind::kConfig,
             "unknown config key '" + key + "' for '" + app_->get_name() + "'");
      }
    }
  }

  /// Resolved options as a config file that reproduces this run.
  std::string manifest() const {
    std::string text = "# crof " CROF_VERSION "\n# command = " + app_->get_name() + "\n";
    text += "# timestamp = " + utc_timestamp() + "\n";
    for (const auto& [name, get] : getters_) text += name + " = " + get() + "\n";
    return text;
  }

  CLI::App* app() const { return app_; }

 private:
  template <typename T>
  void apply(const std::string& name, T& var) {
    if (config_ == nullptr) return;
    for (const auto& [key, value] : *config_) {
      if (normalize_key(key) == name) {
        parse_value(key, value, var);
        used_.insert(name);
      }
    }
  }

  static std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  CLI::App* app_;
  const KeyValues* config_;
  std::string config_path_;
  std::set<std::string> used_;
  std::vector<std::pair<std::string, std::function<std::string()>>> getters_;
};

void write_manifest(const Binder& b, const fs::path& dir) {
  fs::create_directories(dir);
  write_text_file(dir / (b.app()->get_name() + ".manifest"), b.manifest());
}

fs::path parent_or_cwd(const fs::path& p) {
  return p.has_parent_path() ? p.parent_path() : fs::path(".");
}

std::size_t resolve_shots(const fs::path& data, std::size_t shots) {
  if (shots > 0) return shots;
  const fs::path manifest = data / "gen-synth.manifest";
  require(fs::exists(manifest), ErrorKind::kConfig,
          "no --shots given and " + manifest.string() + " not found");
  return kv_size(parse_key_values(read_text_file(manifest), manifest.string()), "shots");
}

// ---- option groups ----------------------------------------------------------

struct TrainFlags {
  TrainConfig cfg;
  bool no_tpg = false;
  bool no_ft = false;
  bool no_wt = false;

  void bind(Binder& b) {
    b.option("alpha", cfg.weighting.alpha, "Loyalty to the original label, in (0,1)");
    b.option("beta", cfg.weighting.beta, "Share of non-original mass for the top-1 label, in (0,1)");
    b.option("gamma", cfg.weighting.gamma, "Per-rank decay of the original label's weight, in (0,1)");
    b.option("topk", cfg.top_k, "Candidate labels per sample");
    b.option("tau", cfg.adapter.tau, "Softmax temperature");
    b.option("lambda", cfg.adapter.lambda, "Residual ratio of the adapter branch");
    b.option("lr", cfg.adapter.lr, "Base learning rate (cosine schedule)");
    b.option("weight-decay", cfg.adapter.weight_decay, "Decoupled AdamW weight decay");
    b.option("epochs", cfg.adapter.epochs, "Training epochs");
    b.option("batch-size", cfg.adapter.batch_size, "Mini-batch size, 0 for full batch");
    b.option("hidden-ratio", cfg.adapter.hidden_ratio, "Adapter hidden width = dims / ratio");
    b.option("seed", cfg.seed, "Seed for adapter initialization and batching");
    b.flag("no-tpg", no_tpg, "Use plain text embeddings instead of fused ones");
    b.flag("no-ft", no_ft, "Skip fine-tuning; zero-shot evaluation only");
    b.flag("no-wt", no_wt, "Plain cross-entropy on the noisy label instead of top-K weighting");
  }

  TrainConfig resolved() const {
    TrainConfig out = cfg;
    out.toggles = Toggles{!no_tpg, !no_ft, !no_wt};
    return out;
  }
};

struct DataFlags {
  std::string data;
  std::string text;
  std::string fused;
  std::string noisy;
  std::size_t shots = 0;

  void bind(Binder& b, bool with_noisy) {
    b.required("data", data, "Dataset directory (images.emb, labels.txt, classes.txt)");
    b.required("text", text, "Plain class text embeddings (CROFEMB1)");
    b.option("fused", fused, "Fused class text embeddings (CROFEMB1), used with tpg");
    if (with_noisy) b.option("noisy", noisy, "Noisy label file; defaults to <data>/noisy_labels.txt");
    b.option("shots", shots, "Train samples per class; 0 reads gen-synth.manifest");
  }

  FewShotDataset dataset() const {
    return load_dataset(data, resolve_shots(data, shots), noisy);
  }
  EmbeddingMatrix plain() const { return load_embeddings(text); }
  std::optional<EmbeddingMatrix> fused_text() const {
    if (fused.empty()) return std::nullopt;
    return load_embeddings(fused);
  }
};

// ---- commands ----------------------------------------------------------------

struct GenSynthFlags {
  std::size_t classes = 20;
  std::size_t dims = 32;
  std::size_t shots = 10;
  std::size_t test_per_class = 50;
  double sigma = 0.4;
  std::size_t seed = 0;
  std::string out;

  void bind(Binder& b) {
    b.option("classes", classes, "Number of classes");
    b.option("dims", dims, "Embedding dimensionality");
    b.option("shots", shots, "Train samples per class");
    b.option("test-per-class", test_per_class, "Test samples per class");
    b.option("sigma", sigma, "Gaussian spread around each prototype");
    b.option("seed", seed, "Generator seed");
    b.required("out", out, "Output directory");
  }

  int run(const Binder& b, std::ostream& os) const {
    write_manifest(b, out);
    const SyntheticData synth = generate_synthetic(classes, dims, shots, test_per_class, sigma, seed);
    save_dataset(synth.dataset, out);
    save_embeddings(synth.prototypes, fs::path(out) / DatasetFiles::kPrototypes);
    os << "wrote " << synth.dataset.images.rows() << " images, " << classes << " prototypes to "
       << out << "\n";
    return 0;
  }
};

struct InjectNoiseFlags {
  std::string data;
  std::string kind = "symmetric";
  double delta = 0.0;
  std::size_t seed = 0;
  std::size_t shots = 0;
  std::string out;

  void bind(Binder& b) {
    b.required("data", data, "Dataset directory");
    b.option("kind", kind, "symmetric or asymmetric");
    b.option("delta", delta, "Noise ratio per class, in [0,1]");
    b.option("seed", seed, "Noise seed");
    b.option("shots", shots, "Train samples per class; 0 reads gen-synth.manifest");
    b.option("out", out, "Noisy label file; defaults to <data>/noisy_labels.txt");
  }

  int run(const Binder& b, std::ostream& os) const {
    const fs::path target = out.empty() ? fs::path(data) / DatasetFiles::kNoisyLabels : fs::path(out);
    const NoiseSpec spec{parse_noise_kind(kind), delta, seed};
    require(delta >= 0.0 && delta <= 1.0, ErrorKind::kConfig, "noise ratio must lie in [0, 1]");
    write_manifest(b, parent_or_cwd(target));
    FewShotDataset ds = load_dataset(data, resolve_shots(data, shots), fs::path(data) / DatasetFiles::kLabels);
    const FewShotDataset noisy = inject_noise(ds, spec);
    save_labels(noisy.noisy_labels, target);
    std::size_t flipped = 0;
    for (std::size_t i = 0; i < noisy.train_rows(); ++i) flipped += noisy.noisy_labels[i] != noisy.clean_labels[i];
    os << "corrupted " << flipped << " of " << noisy.train_rows() << " train labels -> "
       << target.string() << "\n";
    return 0;
  }
};

struct FuseFlags {
  std::string sup;
  std::string cafo;
  std::string out;
  std::size_t per_class = 1;
  std::string similarity_csv;

  void bind(Binder& b) {
    b.required("sup", sup, "Supplement-description embeddings (CROFEMB1)");
    b.required("cafo", cafo, "Baseline-description embeddings (CROFEMB1)");
    b.required("out", out, "Fused output (CROFEMB1)");
    b.option("per-class", per_class, "Consecutive description rows per class, averaged first");
    b.option("similarity-csv", similarity_csv, "Write the fused inter-class similarity matrix here");
  }

  int run(const Binder& b, std::ostream& os) const {
    write_manifest(b, parent_or_cwd(out));
    const EmbeddingMatrix s = average_descriptions(load_embeddings(sup), per_class);
    const EmbeddingMatrix c = average_descriptions(load_embeddings(cafo), per_class);
    const EmbeddingMatrix fused = fuse(s, c);
    save_embeddings(fused, out);
    const Matrix sim = interclass_similarity(fused);
    if (!similarity_csv.empty()) write_text_file(similarity_csv, matrix_to_csv(sim));
    if (fused.rows() >= 2) {
      os << "mean_offdiagonal,sup," << format_number(mean_offdiagonal(interclass_similarity(s)))
         << "\nmean_offdiagonal,cafo," << format_number(mean_offdiagonal(interclass_similarity(c)))
         << "\nmean_offdiagonal,fused," << format_number(mean_offdiagonal(sim)) << "\n";
    }
    return 0;
  }
};

struct PromptFlags {
  std::string target;
  std::string classes;
  std::string out;

  void bind(Binder& b) {
    b.required("target", target, "Task target, e.g. flower or action");
    b.required("classes", classes, "Class-name file, one name per line");
    b.option("out", out, "Write the request here instead of stdout");
  }

  int run(std::ostream& os) const {
    const auto names = load_class_names(classes);
    const std::string text = build_prompt_request(target, names) + "\n";
    if (out.empty()) {
      os << text;
    } else {
      write_text_file(out, text);
    }
    return 0;
  }
};

struct TrainCmdFlags {
  DataFlags data;
  TrainFlags train;
  std::string out;

  void bind(Binder& b) {
    data.bind(b, /*with_noisy=*/true);
    train.bind(b);
    b.required("out", out, "Output directory for metrics.csv and adapter weights");
  }

  int run(const Binder& b, std::ostream& os) const {
    const TrainConfig cfg = train.resolved();
    cfg.validate();
    require(!cfg.toggles.tpg || !data.fused.empty(), ErrorKind::kConfig,
            "--fused is required unless --no-tpg is given");
    write_manifest(b, out);
    const FewShotDataset ds = data.dataset();
    const TrainResult result = train_run(ds, cfg);
    write_text_file(fs::path(out) / "metrics.csv", result.metrics.to_csv());
    save_params(result.params, fs::path(out) / "adapter");
    os << "toggles " << cfg.toggles.label() << ": final test accuracy "
       << format_number(result.metrics.final_test_accuracy()) << "%, best "
       << format_number(result.metrics.best_test_accuracy()) << "%\n";
    return 0;
  }

  TrainResult train_run(const FewShotDataset& ds, const TrainConfig& cfg) const {
    return crof::train(ds, data.fused_text(), data.plain(), cfg);
  }
};

struct SweepFlags {
  DataFlags data;
  TrainFlags train;
  std::string kind = "symmetric";
  std::vector<double> deltas{0.0, 0.2, 0.4, 0.6, 0.8};
  std::vector<std::size_t> seeds{1, 2, 3};
  std::vector<std::string> toggles;
  std::size_t jobs = 1;
  std::string out;

  void bind(Binder& b) {
    data.bind(b, /*with_noisy=*/false);
    train.bind(b);
    b.option("kind", kind, "Noise kind: symmetric or asymmetric");
    b.option("deltas", deltas, "Comma-separated noise ratios");
    b.option("seeds", seeds, "Comma-separated seeds");
    b.option("toggles", toggles,
             "Comma-separated toggle sets such as none,ft,ft+wt,tpg+ft+wt; "
             "default none,ft,ft+wt plus tpg+ft+wt when --fused is given");
    b.option("jobs", jobs, "Cells trained in parallel");
    b.required("out", out, "Sweep CSV output");
  }

  int run(const Binder& b, std::ostream& os) const {
    TrainConfig cfg = train.resolved();
    cfg.noise.kind = parse_noise_kind(kind);
    std::vector<Toggles> sets;
    for (const auto& t : toggles) sets.push_back(Toggles::parse(t));
    if (sets.empty()) {
      sets = {Toggles::parse("none"), Toggles::parse("ft"), Toggles::parse("ft+wt")};
      if (!data.fused.empty()) sets.push_back(Toggles::parse("tpg+ft+wt"));
    }
    std::vector<std::uint64_t> seed_list(seeds.begin(), seeds.end());
    write_manifest(b, parent_or_cwd(out));
    const FewShotDataset ds = data.dataset();
    const auto rows = crof::sweep(ds, data.fused_text(), data.plain(), cfg, deltas, seed_list, sets, jobs);
    write_text_file(out, sweep_to_csv(rows));
    os << "wrote " << rows.size() << " sweep rows to " << out << "\n";
    return 0;
  }
};

struct WeightsFlags {
  std::vector<double> logits;
  std::size_t label = 0;
  std::string classes;
  std::string data;
  std::string text;
  std::string params;
  std::string noisy;
  std::size_t shots = 0;
  std::size_t sample = 0;
  TrainConfig cfg;

  void bind(Binder& b) {
    b.option("logits", logits, "Comma-separated logits for one sample");
    b.option("label", label, "Original (noisy) label for --logits");
    b.option("classes", classes, "Class-name file for --logits");
    b.option("data", data, "Dataset directory; inspect --sample instead of --logits");
    b.option("text", text, "Class text embeddings used with --data");
    b.option("params", params, "Adapter prefix (as written by train) applied before scoring");
    b.option("noisy", noisy, "Noisy label file used with --data");
    b.option("shots", shots, "Train samples per class; 0 reads gen-synth.manifest");
    b.option("sample", sample, "Row of the dataset to inspect");
    b.option("alpha", cfg.weighting.alpha, "Loyalty to the original label, in (0,1)");
    b.option("beta", cfg.weighting.beta, "Share of non-original mass for the top-1 label, in (0,1)");
    b.option("gamma", cfg.weighting.gamma, "Per-rank decay of the original label's weight, in (0,1)");
    b.option("topk", cfg.top_k, "Candidate labels per sample");
    b.option("tau", cfg.adapter.tau, "Softmax temperature");
  }

  int run(std::ostream& os) const {
    std::vector<double> z = logits;
    std::size_t original = label;
    std::vector<std::string> names;
    if (!data.empty()) {
      require(!text.empty(), ErrorKind::kConfig, "--data needs --text");
      const FewShotDataset ds = load_dataset(data, resolve_shots(data, shots), noisy);
      require(sample < ds.images.rows(), ErrorKind::kIndex,
              "sample " + std::to_string(sample) + " out of range");
      Matrix x = ds.images.slice_rows(sample, sample + 1).to_matrix();
      if (!params.empty()) x = forward(x, load_params(params));
      z = similarities(x.row(0), load_embeddings(text).to_matrix(), cfg.adapter.tau);
      original = ds.noisy_labels[sample];
      names = ds.class_names;
    } else {
      require(!z.empty(), ErrorKind::kConfig, "pass --logits or --data");
      if (!classes.empty()) names = load_class_names(classes);
    }
    require(names.empty() || names.size() == z.size(), ErrorKind::kShape,
            "class-name count does not match logits");

    const RankedSimilarities rs = rank_original(z, original, cfg.top_k);
    WeightVector wv = compute_weights(rs, cfg.weighting);
    normalize_weights(wv, rs);

    os << "rank,class,name,logit,original,r,scenario,w,w_star\n";
    for (std::size_t i = 0; i < rs.order.size(); ++i) {
      const std::size_t c = rs.order[i];
      const bool in_top = i < wv.w.size();
      os << i + 1 << ',' << c << ',' << (names.empty() ? "class_" + std::to_string(c) : names[c])
         << ',' << format_number(rs.logits[i]) << ',' << (c == original ? 1 : 0) << ','
         << rs.rank << ',' << to_string(wv.scenario) << ','
         << format_number(in_top ? wv.w[i] : 0.0) << ','
         << format_number(in_top ? wv.w_star[i] : 0.0) << '\n';
    }
    return 0;
  }
};

// Finds `--config` and the subcommand name before CLI11 parses anything.
std::pair<std::string, std::string> prescan(const std::vector<std::string>& args) {
  std::string command;
  std::string config;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (command.empty() && !a.empty() && a[0] != '-') command = a;
    if (a == "--config" && i + 1 < args.size()) config = args[i + 1];
    if (a.rfind("--config=", 0) == 0) config = a.substr(9);
  }
  return {command, config};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"crof: few-shot adapter training that stays robust to noisy labels", "crof"};
  app.require_subcommand(1);
  app.set_version_flag("--version", CROF_VERSION);

  try {
    const auto [command, config_path] = prescan(args);
    KeyValues config;
    if (!config_path.empty()) config = parse_key_values(read_text_file(config_path), config_path);
    auto config_for = [&](const std::string& name) -> const KeyValues* {
      return !config_path.empty() && name == command ? &config : nullptr;
    };

    GenSynthFlags gen;
    auto* gen_app = app.add_subcommand("gen-synth", "Generate a synthetic few-shot embedding dataset");
    Binder gen_b(gen_app, config_for("gen-synth"));
    gen.bind(gen_b);

    InjectNoiseFlags noise;
    auto* noise_app = app.add_subcommand("inject-noise", "Corrupt train labels with symmetric or asymmetric noise");
    Binder noise_b(noise_app, config_for("inject-noise"));
    noise.bind(noise_b);

    FuseFlags fuse_f;
    auto* fuse_app = app.add_subcommand("fuse", "Fuse supplement and baseline class text embeddings");
    Binder fuse_b(fuse_app, config_for("fuse"));
    fuse_f.bind(fuse_b);

    PromptFlags prompt;
    auto* prompt_app = app.add_subcommand("prompt-request", "Print the description request for a chat model");
    Binder prompt_b(prompt_app, config_for("prompt-request"));
    prompt.bind(prompt_b);

    TrainCmdFlags train_f;
    auto* train_app = app.add_subcommand("train", "Fine-tune the adapter and record per-epoch metrics");
    Binder train_b(train_app, config_for("train"));
    train_f.bind(train_b);

    SweepFlags sweep_f;
    auto* sweep_app = app.add_subcommand("sweep", "Train over noise ratios, toggle sets and seeds");
    Binder sweep_b(sweep_app, config_for("sweep"));
    sweep_f.bind(sweep_b);

    WeightsFlags weights;
    auto* weights_app = app.add_subcommand("weights", "Show the top-K label weights for one sample");
    Binder weights_b(weights_app, config_for("weights"));
    weights.bind(weights_b);

    for (const Binder* b : {&gen_b, &noise_b, &fuse_b, &prompt_b, &train_b, &sweep_b, &weights_b}) {
      b->finish();
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(reversed);

    if (gen_app->parsed()) return gen.run(gen_b, out);
    if (noise_app->parsed()) return noise.run(noise_b, out);
    if (fuse_app->parsed()) return fuse_f.run(fuse_b, out);
    if (prompt_app->parsed()) return prompt.run(out);
    if (train_app->parsed()) return train_f.run(train_b, out);
    if (sweep_app->parsed()) return sweep_f.run(sweep_b, out);
    if (weights_app->parsed()) return weights.run(out);
    return kUsageExit;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      return app.exit(e, out, err);
    }
    err << "crof: usage error: " << e.what() << "\n";
    return kUsageExit;
  } catch (const Error& e) {
    err << "crof: " << e.what() << "\n";
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    err << "crof: " << to_string(ErrorKind::kStorage) << ": " << e.what() << "\n";
    return static_cast<int>(ErrorKind::kStorage);
  } catch (const std::exception& e) {
    err << "crof: internal error: " << e.what() << "\n";
    return kInternalExit;
  }
}

}  // namespace crof::cli
