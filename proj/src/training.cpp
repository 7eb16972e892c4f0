#include "proxipm/training.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "proxipm/imaging.hpp"
#include "proxipm/parallel.hpp"
#include "proxipm/rng.hpp"

namespace proxipm {

void TrainConfig::validate() const {
  if (epochs_per_layer <= 0 || batch_size <= 0 || K < 0)
    throw std::invalid_argument("TrainConfig: counts must be positive");
  if (!(learning_rate > 0.0) || !(adam_eps > 0.0))
    throw std::invalid_argument("TrainConfig: rates must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
    throw std::invalid_argument("TrainConfig: betas must be in (0,1)");
  if (!(lr_decay.factor > 0.0 && lr_decay.factor <= 1.0) ||
      lr_decay.every_n_epochs < 0)
    throw std::invalid_argument("TrainConfig: invalid lr decay");
}

void adam_step(AdamState& state, Eigen::ArrayXd& params,
               const Eigen::ArrayXd& grads, double lr, double beta1,
               double beta2, double eps) {
  if (state.m.size() != grads.size() || params.size() != grads.size())
    throw std::invalid_argument("adam_step: dimension mismatch");
  if (!grads.isFinite().all())
    throw std::runtime_error("adam_step: non-finite gradient");
  state.t += 1;
  state.m = beta1 * state.m + (1.0 - beta1) * grads;
  state.v = beta2 * state.v + (1.0 - beta2) * grads.square();
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  params -= lr * (state.m / bc1) / ((state.v / bc2).sqrt() + eps);
}

void write_train_report_csv(const std::string& path,
                            const TrainReport& report) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out)
      throw std::runtime_error("write_train_report_csv: cannot write '" +
                               path + "'");
    out.precision(17);
    out << "layer,epoch,mean_train_ssim,loss\n";
    for (const auto& row : report.epochs)
      out << row.layer << "," << row.epoch << "," << row.mean_train_ssim
          << "," << row.loss << "\n";
  }
  std::filesystem::rename(tmp, path);
}

namespace {

struct ImageState {
  ImageTensor truth;
  DeblurProblem problem;
  double sigma_hat = 0.0;
  ImageTensor x;  // inputs of the layer currently being trained
};

double mean_output_ssim(const UnfoldedNetwork& net, int k,
                        std::vector<ImageState>& states, int workers) {
  std::vector<double> slot(states.size());
  parallel_for(
      states.size(),
      [&](std::size_t i) {
        const ImageTensor out = layer_forward(net, k, states[i].problem,
                                              states[i].x, states[i].sigma_hat);
        slot[i] = ssim(out, states[i].truth);
      },
      workers);
  return std::accumulate(slot.begin(), slot.end(), 0.0) /
         static_cast<double>(slot.size());
}

}  // namespace

std::pair<UnfoldedNetwork, TrainReport> train_greedy(
    const Eigen::ArrayXXd& kernel, double delta, Box box,
    const std::vector<std::pair<ImageTensor, ImageTensor>>& dataset,
    const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.empty())
    throw std::invalid_argument("train_greedy: empty dataset");
  for (const auto& [truth, degraded] : dataset) {
    require_same_shape(truth, degraded, "train_greedy");
    require_same_shape(truth, dataset.front().first, "train_greedy");
  }

  UnfoldedNetwork net = UnfoldedNetwork::make(cfg.K, kernel, delta, box);
  TrainReport report;

  std::vector<ImageState> states;
  states.reserve(dataset.size());
  const double margin = net.x0_margin * (box.x_max - box.x_min);
  for (const auto& [truth, degraded] : dataset) {
    ImageState st{truth, net.problem_for(degraded),
                  estimate_noise_std(degraded), degraded};
    st.x.data = st.x.data.max(box.x_min + margin).min(box.x_max - margin);
    states.push_back(std::move(st));
  }

  {
    double acc = 0.0;
    for (const auto& st : states) acc += ssim(st.x, st.truth);
    report.initial_ssim = acc / static_cast<double>(states.size());
  }
  if (cfg.K == 0) return {std::move(net), std::move(report)};

  const std::size_t n = states.size();
  for (int k = 0; k < cfg.K; ++k) {
    if (k > 0) net.layers[k] = net.layers[k - 1];

    const double ssim_before = mean_output_ssim(net, k, states, cfg.workers);

    AdamState adam(4);
    Rng shuffle_rng(mix_seed(cfg.seed, 0x747261696eULL + k));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    double last_epoch_ssim = ssim_before;
    for (int epoch = 0; epoch < cfg.epochs_per_layer; ++epoch) {
      double lr = cfg.learning_rate;
      if (cfg.lr_decay.every_n_epochs > 0)
        lr *= std::pow(cfg.lr_decay.factor,
                       epoch / cfg.lr_decay.every_n_epochs);

      // Fisher-Yates off the layer/seed stream.
      for (std::size_t i = n; i > 1; --i) {
        const std::size_t j =
            static_cast<std::size_t>(shuffle_rng.next_u64() % i);
        std::swap(order[i - 1], order[j]);
      }

      double epoch_loss = 0.0;
      int steps = 0;
      for (std::size_t pos = 0; pos < n; pos += cfg.batch_size) {
        const std::size_t batch =
            std::min<std::size_t>(cfg.batch_size, n - pos);
        std::vector<LayerGrads> grad_slot(batch);
        std::vector<double> loss_slot(batch);
        parallel_for(
            batch,
            [&](std::size_t b) {
              ImageState& st = states[order[pos + b]];
              LayerCache cache;
              const ImageTensor out = layer_forward(
                  net, k, st.problem, st.x, st.sigma_hat, &cache);
              auto [value, grad] = ssim_value_grad(out, st.truth);
              loss_slot[b] = -value;
              grad.data = -grad.data;
              grad_slot[b] = layer_vjp(st.problem, cache, grad);
            },
            cfg.workers);

        Eigen::ArrayXd g = Eigen::ArrayXd::Zero(4);
        double loss = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
          g[0] += grad_slot[b].a;
          g[1] += grad_slot[b].m;
          g[2] += grad_slot[b].b;
          g[3] += grad_slot[b].c;
          loss += loss_slot[b];
        }
        g /= static_cast<double>(batch);
        loss /= static_cast<double>(batch);
        if (!std::isfinite(loss) || !g.isFinite().all())
          throw std::runtime_error(
              "train_greedy: non-finite loss or gradient at layer " +
              std::to_string(k) + ", epoch " + std::to_string(epoch) +
              ", step " + std::to_string(steps));

        LayerParams& par = net.layers[k];
        Eigen::ArrayXd params(4);
        params << par.a, par.m, par.b, par.c;
        adam_step(adam, params, g, lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
        par.a = params[0];
        par.m = params[1];
        par.b = params[2];
        par.c = params[3];

        epoch_loss += loss;
        ++steps;
      }

      last_epoch_ssim = mean_output_ssim(net, k, states, cfg.workers);
      report.epochs.push_back({k, epoch, last_epoch_ssim,
                               epoch_loss / std::max(steps, 1)});
    }

    // Materialize this layer's outputs as the next layer's inputs.
    parallel_for(
        n,
        [&](std::size_t i) {
          states[i].x = layer_forward(net, k, states[i].problem, states[i].x,
                                      states[i].sigma_hat);
        },
        cfg.workers);

    report.layers.push_back({k, ssim_before, last_epoch_ssim});
  }

  return {std::move(net), std::move(report)};
}

TrainConfig train_config_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  TrainConfig cfg;
  if (j.contains("epochs_per_layer"))
    cfg.epochs_per_layer = j["epochs_per_layer"].get<int>();
  if (j.contains("learning_rate"))
    cfg.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("adam_betas")) {
    cfg.beta1 = j["adam_betas"][0].get<double>();
    cfg.beta2 = j["adam_betas"][1].get<double>();
  }
  if (j.contains("adam_eps")) cfg.adam_eps = j["adam_eps"].get<double>();
  if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("K")) cfg.K = j["K"].get<int>();
  if (j.contains("lr_decay")) {
    cfg.lr_decay.factor = j["lr_decay"].at("factor").get<double>();
    cfg.lr_decay.every_n_epochs =
        j["lr_decay"].at("every_n_epochs").get<int>();
  }
  if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
  cfg.validate();
  return cfg;
}

std::string train_config_to_json(const TrainConfig& cfg) {
  nlohmann::json j;
  j["epochs_per_layer"] = cfg.epochs_per_layer;
  j["learning_rate"] = cfg.learning_rate;
  j["adam_betas"] = {cfg.beta1, cfg.beta2};
  j["adam_eps"] = cfg.adam_eps;
  j["batch_size"] = cfg.batch_size;
  j["seed"] = cfg.seed;
  j["K"] = cfg.K;
  j["lr_decay"] = {{"factor", cfg.lr_decay.factor},
                   {"every_n_epochs", cfg.lr_decay.every_n_epochs}};
  j["workers"] = cfg.workers;
  return j.dump(2);
}

}  // namespace proxipm
