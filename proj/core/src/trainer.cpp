#include "spangcn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include <json.hpp>

#include "spangcn/error.hpp"

namespace spangcn {

double clip_global_norm(GradMap& grads, double clip) {
  double sq = 0.0;
  for (const auto& [name, g] : grads)
    for (double x : g.v) sq += x * x;
  double norm = std::sqrt(sq);
  if (clip > 0 && norm > clip) {
    double s = clip / norm;
    for (auto& [name, g] : grads)
      for (double& x : g.v) x *= s;
  }
  return norm;
}

void adam_step(ModelParams& params, const GradMap& grads, AdamState& state,
               const TrainConfig& cfg, double lr) {
  ++state.step;
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (const auto& [name, g] : grads) {
    if (!g.all_finite())
      throw NumericError("non-finite gradient for parameter '" + name + "'");
    Tensor& p = params.get(name);
    if (p.v.size() != g.v.size())
      throw ShapeError("gradient shape mismatch for parameter '" + name + "'");
    auto mit = state.m.find(name);
    if (mit == state.m.end()) {
      mit = state.m.emplace(name, Tensor::zeros(g.shape)).first;
      state.v.emplace(name, Tensor::zeros(g.shape));
    }
    Tensor& m = mit->second;
    Tensor& v = state.v.at(name);
    for (size_t i = 0; i < g.v.size(); ++i) {
      m.v[i] = cfg.beta1 * m.v[i] + (1.0 - cfg.beta1) * g.v[i];
      v.v[i] = cfg.beta2 * v.v[i] + (1.0 - cfg.beta2) * g.v[i] * g.v[i];
      double mhat = m.v[i] / bc1;
      double vhat = v.v[i] / bc2;
      p.v[i] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
  }
}

double PlateauSchedule::observe(double dev_score) {
  if (dev_score > best) {
    best = dev_score;
    stale = 0;
  } else {
    ++stale;
    if (stale >= patience) {
      lr *= 0.5;
      stale = 0;
    }
  }
  return lr;
}

int eval_thread_count() {
  const char* env = std::getenv("SPANGCN_THREADS");
  if (!env || !*env) return 1;
  int n = std::atoi(env);
  return n > 0 ? n : 1;
}

PredictionSet evaluate(const SrlModel& model,
                       const std::vector<SrlExample>& examples) {
  int n = static_cast<int>(examples.size());
  std::vector<std::vector<RoleSpan>> preds(n);
  int threads = std::min(eval_thread_count(), std::max(n, 1));
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) preds[i] = model.predict_spans(examples[i]);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mu;
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int i = w; i < n; i += threads)
            preds[i] = model.predict_spans(examples[i]);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!err) err = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
  }
  PredictionSet out;
  for (int i = 0; i < n; ++i) {
    PredictionSet::Item item;
    item.sentence_id = i;
    item.predicate = examples[i].predicate;
    item.sentence_length = static_cast<int>(examples[i].tokens.size());
    item.gold = examples[i].gold_spans;
    std::sort(item.gold.begin(), item.gold.end());
    item.pred = std::move(preds[i]);
    std::sort(item.pred.begin(), item.pred.end());
    out.items.push_back(std::move(item));
  }
  return out;
}

TrainResult train(SrlModel& model, const std::vector<SrlExample>& train_set,
                  const std::vector<SrlExample>& dev_set,
                  const TrainConfig& cfg, std::ostream* log,
                  const std::string& checkpoint_path) {
  if (train_set.empty()) throw ValidationError("empty training set");
  TrainResult result;
  AdamState adam;
  PlateauSchedule sched(cfg.lr, cfg.plateau_patience);
  std::mt19937_64 shuffle_rng(cfg.seed);
  std::mt19937_64 dropout_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

  std::vector<int> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    double lr = sched.lr;
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double nll_sum = 0.0;
    for (int i : order) {
      GradMap grads;
      nll_sum += model.loss_and_grads(train_set[i], grads, dropout_rng);
      clip_global_norm(grads, cfg.grad_clip);
      adam_step(model.params(), grads, adam, cfg, lr);
    }

    EpochStats st;
    st.epoch = epoch;
    st.lr = lr;
    st.train_nll = nll_sum / static_cast<double>(train_set.size());
    st.dev = span_prf(evaluate(model, dev_set));
    double dev_f1 = st.dev.f1();

    if (dev_f1 > result.best_f1) {
      result.best_f1 = dev_f1;
      result.best_epoch = epoch;
      if (!checkpoint_path.empty())
        save_checkpoint(checkpoint_path, model.params(),
                        model.config().to_json());
    }
    sched.observe(dev_f1);

    auto t1 = std::chrono::steady_clock::now();
    st.seconds =
        cfg.log_seconds ? std::chrono::duration<double>(t1 - t0).count() : 0.0;
    if (log) {
      nlohmann::ordered_json j;
      j["epoch"] = st.epoch;
      j["lr"] = st.lr;
      j["train_nll"] = st.train_nll;
      j["dev_p"] = st.dev.precision();
      j["dev_r"] = st.dev.recall();
      j["dev_f1"] = dev_f1;
      j["seconds"] = st.seconds;
      *log << j.dump() << "\n";
    }
    result.epochs.push_back(st);
  }
  return result;
}

}  // namespace spangcn
