#include "crof/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "crof/error.hpp"
#include "crof/objective.hpp"
#include "crof/text_format.hpp"

namespace crof {
namespace {

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::ranges::max_element(v) - v.begin());
}

double accuracy_percent(const Matrix& features, std::span<const std::size_t> labels,
                        const Matrix& text, double tau) {
  require(features.rows() == labels.size(), ErrorKind::kShape,
          std::to_string(labels.size()) + " labels for " + std::to_string(features.rows()) +
              " images");
  if (features.rows() == 0) return 0.0;
  const Matrix z = similarities(features, text, tau);
  std::size_t correct = 0;
  for (std::size_t b = 0; b < z.rows(); ++b) {
    if (argmax(z.row(b)) == labels[b]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(z.rows());
}

// Per-sample objective and logit gradient under the configured toggles.
struct SampleStep {
  double loss = 0.0;
  std::vector<double> grad;
};

SampleStep objective_for(std::span<const double> z, std::size_t noisy_label,
                         const TrainConfig& cfg, const WeightObserver& observer) {
  if (cfg.toggles.wt) {
    WeightVector wv = weigh_sample(z, noisy_label, cfg.top_k, cfg.weighting);
    if (cfg.check_weights) check_simplex(wv);
    if (observer) observer(wv);
    const SampleObjective so = make_sample_objective(z, wv.candidates, wv.w_star);
    return {weighted_loss(so), logit_gradient(so)};
  }
  const SampleObjective so = make_sample_objective(z, {}, {});
  auto [loss, grad] = plain_ce(so, noisy_label);
  return {loss, std::move(grad)};
}

class Run {
 public:
  Run(const FewShotDataset& ds, const EmbeddingMatrix& text, const TrainConfig& cfg,
      const WeightObserver& observer)
      : cfg_(cfg),
        observer_(observer),
        text_(text.to_matrix()),
        train_x_(ds.train_images().to_matrix()),
        train_noisy_(ds.train_noisy()),
        train_clean_(ds.train_clean()),
        test_clean_(ds.test_clean()) {
    if (ds.test_rows() > 0) test_x_ = ds.test_images().to_matrix();
  }

  void record(std::size_t epoch, const AdapterParams* params, Metrics& metrics) const {
    const double tau = cfg_.adapter.tau;
    const Matrix train_feat = params ? forward(train_x_, *params) : train_x_;
    const Matrix train_z = similarities(train_feat, text_, tau);
    double train_loss = 0.0;
    for (std::size_t b = 0; b < train_z.rows(); ++b) {
      train_loss += objective_for(train_z.row(b), train_noisy_[b], cfg_, {}).loss;
    }
    train_loss /= static_cast<double>(std::max<std::size_t>(1, train_z.rows()));
    metrics.rows.push_back(
        {epoch, "train", accuracy_percent(train_feat, train_clean_, text_, tau), train_loss});

    if (test_x_.rows() == 0) return;
    const Matrix test_feat = params ? forward(test_x_, *params) : test_x_;
    const Matrix test_z = similarities(test_feat, text_, tau);
    double test_loss = 0.0;
    for (std::size_t b = 0; b < test_z.rows(); ++b) test_loss += ce_loss(test_z.row(b), test_clean_[b]);
    test_loss /= static_cast<double>(test_z.rows());
    metrics.rows.push_back(
        {epoch, "test", accuracy_percent(test_feat, test_clean_, text_, tau), test_loss});
  }

  void fit(AdapterParams& params, Metrics& metrics) const {
    const AdapterConfig& acfg = cfg_.adapter;
    const std::size_t m = train_x_.rows();
    const std::size_t batch = acfg.batch_size == 0 ? m : std::min(acfg.batch_size, m);
    const std::size_t batches = (m + batch - 1) / batch;
    const std::size_t total_steps = acfg.epochs * batches;
    const std::size_t n = text_.rows();

    std::mt19937_64 shuffle_rng(cfg_.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::size_t step = 0;
    for (std::size_t epoch = 1; epoch <= acfg.epochs; ++epoch) {
      if (batch < m) std::shuffle(order.begin(), order.end(), shuffle_rng);
      for (std::size_t start = 0; start < m; start += batch) {
        const std::size_t count = std::min(batch, m - start);
        const std::span<const std::size_t> idx(order.data() + start, count);
        const Matrix xb = gather_rows(train_x_, idx);
        const Matrix z = similarities(forward(xb, params), text_, acfg.tau);
        Matrix logit_grads(count, n);
        for (std::size_t b = 0; b < count; ++b) {
          const auto g = objective_for(z.row(b), train_noisy_[idx[b]], cfg_, observer_).grad;
          std::ranges::copy(g, logit_grads.row(b).begin());
        }
        const AdapterGrads grads = backward(xb, text_, params, logit_grads, acfg.tau);
        optimizer_step(params, grads, step++, total_steps, acfg);
      }
      record(epoch, &params, metrics);
    }
  }

 private:
  const TrainConfig& cfg_;
  const WeightObserver& observer_;
  Matrix text_;
  Matrix train_x_;
  Matrix test_x_;
  std::vector<std::size_t> train_noisy_;
  std::vector<std::size_t> train_clean_;
  std::vector<std::size_t> test_clean_;
};

}  // namespace

std::string Toggles::label() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  add(tpg, "tpg");
  add(ft, "ft");
  add(wt, "wt");
  return out.empty() ? "none" : out;
}

Toggles Toggles::parse(std::string_view text) {
  Toggles t{false, false, false};
  if (text == "none" || text == "zs") return t;
  while (!text.empty()) {
    const auto plus = text.find('+');
    const auto part = text.substr(0, plus);
    if (part == "tpg") {
      t.tpg = true;
    } else if (part == "ft") {
      t.ft = true;
    } else if (part == "wt") {
      t.wt = true;
    } else {
      fail(ErrorKind::kConfig, "unknown toggle '" + std::string(part) + "'");
    }
    text = plus == std::string_view::npos ? std::string_view{} : text.substr(plus + 1);
  }
  return t;
}

void TrainConfig::validate() const {
  weighting.validate();
  adapter.validate();
  require(top_k >= 1, ErrorKind::kConfig, "top-K must be >= 1");
  require(noise.delta >= 0.0 && noise.delta <= 1.0, ErrorKind::kConfig,
          "noise ratio must lie in [0, 1]");
}

std::string Metrics::to_csv() const {
  std::string out = "epoch,split,accuracy,loss\n";
  for (const auto& r : rows) {
    out += std::to_string(r.epoch) + "," + r.split + "," + format_number(r.accuracy) + "," +
           format_number(r.loss) + "\n";
  }
  return out;
}

double Metrics::final_test_accuracy() const {
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
    if (it->split == "test") return it->accuracy;
  }
  fail(ErrorKind::kSize, "no test rows recorded");
}

double Metrics::best_test_accuracy() const {
  double best = -1.0;
  for (const auto& r : rows) {
    if (r.split == "test") best = std::max(best, r.accuracy);
  }
  require(best >= 0.0, ErrorKind::kSize, "no test rows recorded");
  return best;
}

double evaluate(const EmbeddingMatrix& images, std::span<const std::size_t> labels,
                const EmbeddingMatrix& text, double tau) {
  require(images.dims() == text.dims(), ErrorKind::kShape, "image and text widths differ");
  return accuracy_percent(images.to_matrix(), labels, text.to_matrix(), tau);
}

double evaluate(const EmbeddingMatrix& images, std::span<const std::size_t> labels,
                const EmbeddingMatrix& text, const AdapterParams& params, double tau) {
  require(images.dims() == text.dims(), ErrorKind::kShape, "image and text widths differ");
  return accuracy_percent(forward(images.to_matrix(), params), labels, text.to_matrix(), tau);
}

TrainResult train(const FewShotDataset& ds, const std::optional<EmbeddingMatrix>& text_fused,
                  const EmbeddingMatrix& text_plain, const TrainConfig& cfg,
                  const WeightObserver& observer) {
  cfg.validate();
  ds.validate();
  require(!cfg.toggles.tpg || text_fused.has_value(), ErrorKind::kConfig,
          "fused text embeddings are required when tpg is enabled");
  const EmbeddingMatrix& text = cfg.toggles.tpg ? *text_fused : text_plain;
  require(text.rows() == ds.n_classes, ErrorKind::kShape,
          "text embeddings have " + std::to_string(text.rows()) + " rows for " +
              std::to_string(ds.n_classes) + " classes");
  require(text.dims() == ds.images.dims(), ErrorKind::kShape,
          "text embeddings are " + std::to_string(text.dims()) + "-dim, images are " +
              std::to_string(ds.images.dims()) + "-dim");

  AdapterConfig acfg = cfg.adapter;
  acfg.seed = cfg.seed;
  TrainConfig run_cfg = cfg;
  run_cfg.adapter = acfg;

  TrainResult result{init_params(ds.images.dims(), acfg), {}};
  const Run run(ds, text, run_cfg, observer);
  if (!cfg.toggles.ft) {
    run.record(0, nullptr, result.metrics);
    return result;
  }
  run.record(0, &result.params, result.metrics);
  run.fit(result.params, result.metrics);
  return result;
}

std::vector<SweepRow> sweep(const FewShotDataset& ds, const std::optional<EmbeddingMatrix>& text_fused,
                            const EmbeddingMatrix& text_plain, const TrainConfig& base_cfg,
                            std::span<const double> deltas, std::span<const std::uint64_t> seeds,
                            std::span<const Toggles> toggle_sets, std::size_t jobs) {
  base_cfg.validate();
  for (double d : deltas) {
    require(d >= 0.0 && d <= 1.0, ErrorKind::kConfig,
            "noise ratio must lie in [0, 1], got " + format_number(d));
  }
  for (const Toggles& t : toggle_sets) {
    require(!t.tpg || text_fused.has_value(), ErrorKind::kConfig,
            "toggle set '" + t.label() + "' needs fused text embeddings");
  }

  FewShotDataset clean = ds;
  clean.noisy_labels = clean.clean_labels;

  struct Cell {
    double delta;
    const Toggles* toggles;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (double d : deltas) {
    for (const Toggles& t : toggle_sets) {
      for (std::uint64_t s : seeds) cells.push_back({d, &t, s});
    }
  }

  std::vector<SweepRow> rows(cells.size());
  auto run_cell = [&](std::size_t i) {
    const Cell& cell = cells[i];
    TrainConfig cfg = base_cfg;
    cfg.toggles = *cell.toggles;
    cfg.seed = cell.seed;
    cfg.noise = NoiseSpec{base_cfg.noise.kind, cell.delta, cell.seed};
    const FewShotDataset noisy = inject_noise(clean, cfg.noise);
    const TrainResult r = train(noisy, text_fused, text_plain, cfg);
    rows[i] = SweepRow{cell.delta, cell.toggles->label(), cell.seed,
                       r.metrics.final_test_accuracy(), r.metrics.best_test_accuracy()};
  };

  const std::size_t workers = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, cells.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
    return rows;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
          try {
            run_cell(i);
          } catch (...) {
            const std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
  return rows;
}

std::string sweep_to_csv(std::span<const SweepRow> rows) {
  std::string out = "delta,toggles,seed,final_acc,best_acc\n";
  for (const auto& r : rows) {
    out += format_number(r.delta) + "," + r.toggles + "," + std::to_string(r.seed) + "," +
           format_number(r.final_acc) + "," + format_number(r.best_acc) + "\n";
  }
  return out;
}

}  // namespace crof
