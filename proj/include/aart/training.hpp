#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aart/data.hpp"
#include "aart/losses.hpp"
#include "aart/model.hpp"

namespace aart {

struct TrainConfig {
    Regime regime = Regime::non_art;
    AdvConfig adv;
    double lr = 0.0002;
    std::size_t batch_size = 64;
    std::size_t eval_every = 200;          // iterations between validation evals
    std::size_t early_stop_patience = 5;   // evals without improvement before stopping
    std::size_t plateau_patience = 3;      // evals without improvement before an lr cut
    double plateau_factor = 0.1;
    std::size_t max_iterations = 5000;
    std::uint64_t seed = 1;                // epoch shuffling
    unsigned threads = 0;

    void validate() const;
};

// Adam with bias correction; moments mirror ModelParams::tensors() order.
// Moment arithmetic runs in double on float32 storage.
struct AdamState {
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::size_t step = 0;

    static AdamState init(const ModelParams& params);
};

void adam_step(ModelParams& params, const std::vector<Tensor>& grads, AdamState& state,
               double lr);

struct EvalPoint {
    std::size_t iteration = 0;
    double val_gap = 0.0;
    double lr = 0.0;          // rate used for the block ending at this eval
    double train_loss = 0.0;  // mean batch loss over that block
};

struct TrainReport {
    std::vector<EvalPoint> history;
    std::vector<double> iteration_losses;  // batch loss per iteration, in memory only
    std::size_t best_iteration = 0;
    double best_val_gap = 0.0;
    std::size_t iterations = 0;
    std::string stop_reason;  // "max_iterations" or "early_stop"
};

struct TrainResult {
    ModelParams params;  // best-validation-GAP checkpoint
    TrainReport report;
};

// Trains from init_params(model). Improvement means val GAP rising by at
// least 1e-6 over the best so far; the plateau counter resets after each lr
// cut, the early-stop counter does not. Exact GAP ties keep the earlier
// checkpoint. A non-finite batch loss raises NumericError naming the
// iteration and learning rate.
TrainResult train(const TrainConfig& config, const ModelConfig& model,
                  const Dataset& train_set, const Dataset& val_set);

void write_train_report_csv(const std::string& path, const TrainReport& report);

// One grid point of a hyperparameter sweep. A failed run is recorded with
// status "error: ..." and the sweep continues.
struct SweepPoint {
    std::string param;
    double value = 0.0;
    double val_gap = 0.0;
    std::size_t best_iteration = 0;
    std::string status;  // "ok" or "error: ..."
};

// param is "epsilon" or "alpha"; every run reuses the same seeds.
std::vector<SweepPoint> sweep(const TrainConfig& base, const ModelConfig& model,
                              const std::string& param, const std::vector<double>& grid,
                              const Dataset& train_set, const Dataset& val_set);

void write_sweep_csv(const std::string& path, const std::vector<SweepPoint>& points);

}  // namespace aart
