#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "tcnscope/layers.hpp"
#include "tcnscope/optim.hpp"
#include "tcnscope/restcn.hpp"
#include "tcnscope/tensor.hpp"

namespace tcnscope {

/// Preprocessed, fixed-length samples ready for a model.
struct Dataset {
  Tensor inputs;  // N×T×D
  std::vector<int> labels;
  std::vector<std::size_t> ids;
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }

  /// Gathers rows `idx` into a B×T×D batch.
  Tensor gather(std::span<const std::size_t> idx) const {
    const std::size_t T = inputs.extent(1), D = inputs.extent(2), row = T * D;
    Tensor out({idx.size(), T, D});
    for (std::size_t b = 0; b < idx.size(); ++b)
      std::copy_n(inputs.data() + idx[b] * row, row, out.data() + b * row);
    return out;
  }

  Dataset subset(std::span<const std::size_t> idx) const {
    Dataset d;
    d.inputs = gather(idx);
    d.num_classes = num_classes;
    for (auto i : idx) {
      d.labels.push_back(labels[i]);
      d.ids.push_back(ids[i]);
    }
    return d;
  }
};

struct EpochRecord {
  int epoch = 0;  // 0 is the evaluation before any update
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_loss = 0.0;
  double test_accuracy = 0.0;
};

struct History {
  std::vector<EpochRecord> epochs;
};

struct FitOptions {
  SGDConfig sgd;
  int epochs = 10;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct EvalResult {
  double accuracy = 0.0;
  double loss = 0.0;
  std::vector<double> per_class;                     // diagonal / row sum, 0 for empty rows
  std::vector<std::vector<std::size_t>> confusion;   // [true][predicted]
  std::vector<int> predictions;
};

inline std::size_t argmax_row(const Tensor& logits, std::size_t b) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < logits.extent(1); ++k)
    if (logits.at(b, k) > logits.at(b, best)) best = k;
  return best;
}

inline EvalResult summarize(const std::vector<int>& labels, const std::vector<int>& predictions, std::size_t classes,
                            double loss) {
  EvalResult r;
  r.loss = loss;
  r.predictions = predictions;
  r.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    r.confusion[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(predictions[i])]++;
    correct += labels[i] == predictions[i];
  }
  r.accuracy = labels.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(labels.size());
  r.per_class.assign(classes, 0.0);
  for (std::size_t k = 0; k < classes; ++k) {
    const auto row = std::accumulate(r.confusion[k].begin(), r.confusion[k].end(), std::size_t{0});
    if (row) r.per_class[k] = static_cast<double>(r.confusion[k][k]) / static_cast<double>(row);
  }
  return r;
}

/// Eval-mode accuracy, per-class accuracy and confusion counts.
template <class Model>
EvalResult evaluate(Model& model, const Dataset& data, std::size_t batch_size = 256) {
  std::vector<int> predictions;
  double loss_sum = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    idx.clear();
    for (std::size_t i = start; i < std::min(data.size(), start + batch_size); ++i) idx.push_back(i);
    ForwardOptions opt;
    opt.mode = Mode::eval;
    auto r = model.forward(data.gather(idx), opt);
    std::vector<int> y(idx.size());
    for (std::size_t b = 0; b < idx.size(); ++b) y[b] = data.labels[idx[b]];
    loss_sum += softmax_xent(r.logits, y).loss * static_cast<double>(idx.size());
    for (std::size_t b = 0; b < idx.size(); ++b) predictions.push_back(static_cast<int>(argmax_row(r.logits, b)));
  }
  const double loss = data.size() ? loss_sum / static_cast<double>(data.size()) : 0.0;
  return summarize(data.labels, predictions, model.config_base().num_classes, loss);
}

/**
 * Mini-batch SGD training with seeded shuffling, L1 on convolution weights
 * and the plateau rule monitored on test loss. Epoch 0 of the history is an
 * eval-mode pass before the first update; later train metrics are running
 * averages over the epoch's training batches.
 */
template <class Model>
History fit(Model& model, const Dataset& train, const Dataset& test, const FitOptions& opt) {
  if (train.size() == 0 || test.size() == 0) throw DataError("fit: empty dataset");
  if (opt.batch_size == 0) throw ConfigError("fit: batch size must be positive");
  SGD sgd(opt.sgd);
  PlateauTracker plateau(opt.sgd);
  std::mt19937_64 rng(opt.seed);
  History history;

  const auto before_train = evaluate(model, train);
  const auto before_test = evaluate(model, test);
  history.epochs.push_back({0, sgd.learning_rate(), before_train.loss, before_train.accuracy, before_test.loss,
                            before_test.accuracy});
  if (opt.on_epoch) opt.on_epoch(history.epochs.back());

  std::vector<std::size_t> order(train.size());
  std::uint64_t step = 0;
  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      std::span<const std::size_t> idx(order.data() + start, std::min(opt.batch_size, order.size() - start));
      std::vector<int> y(idx.size());
      for (std::size_t b = 0; b < idx.size(); ++b) y[b] = train.labels[idx[b]];
      ForwardOptions fo;
      fo.mode = Mode::train;
      fo.dropout_seed = mix_seed(opt.seed, ++step);
      auto r = model.forward(train.gather(idx), fo);
      const auto xent = softmax_xent(r.logits, y);
      if (!std::isfinite(xent.loss)) throw NumericError("fit: non-finite training loss at epoch " + std::to_string(epoch));
      model.zero_grad();
      model.backward(softmax_xent_backward(xent.probs, y));
      sgd.step(model.parameters());
      loss_sum += xent.loss * static_cast<double>(idx.size());
      for (std::size_t b = 0; b < idx.size(); ++b) correct += static_cast<int>(argmax_row(r.logits, b)) == y[b];
    }
    const auto test_eval = evaluate(model, test);
    EpochRecord rec{epoch,
                    sgd.learning_rate(),
                    loss_sum / static_cast<double>(train.size()),
                    static_cast<double>(correct) / static_cast<double>(train.size()),
                    test_eval.loss,
                    test_eval.accuracy};
    if (!std::isfinite(rec.test_loss)) throw NumericError("fit: non-finite test loss at epoch " + std::to_string(epoch));
    history.epochs.push_back(rec);
    if (opt.on_epoch) opt.on_epoch(rec);
    plateau.observe(rec.test_loss);
    sgd.set_learning_rate(plateau.learning_rate());
  }
  return history;
}

}  // namespace tcnscope
