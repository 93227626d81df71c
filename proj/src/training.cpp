#include "aart/training.hpp"

#include <cmath>
#include <limits>

#include "aart/errors.hpp"
#include "aart/evaluate.hpp"
#include "aart/parallel.hpp"
#include "aart/rng.hpp"
#include "aart/textio.hpp"

namespace aart {
namespace {

struct ExampleGrad {
    std::vector<Tensor> grads;  // aligned with ModelParams::tensors()
    double loss = 0.0;
};

ExampleGrad example_gradient(const VideoExample& ex, const ModelParams& params,
                             const ModelConfig& model, Regime regime, const AdvConfig& adv) {
    Perturbation r;
    if (regime != Regime::non_art) r = fgsm_perturbation(ex, params, model, adv.epsilon);
    ExampleLossGraph built = build_example_loss(ex, params, model, regime, adv,
                                                regime == Regime::non_art ? nullptr : &r,
                                                /*inputs_require_grad=*/false);
    std::vector<NodeId> wrt = built.params.all();
    GradientMap gm = built.graph.backward(built.loss, wrt);
    ExampleGrad out;
    out.grads.reserve(wrt.size());
    for (NodeId id : wrt) out.grads.push_back(std::move(gm.at(id)));
    out.loss = built.graph.scalar_value(built.loss);
    return out;
}

// Mean of per-example gradients, accumulated in double.
std::vector<Tensor> reduce_gradients(const std::vector<ExampleGrad>& parts) {
    const std::size_t num_params = parts.front().grads.size();
    std::vector<Tensor> out;
    out.reserve(num_params);
    const double inv = 1.0 / static_cast<double>(parts.size());
    for (std::size_t j = 0; j < num_params; ++j) {
        const Tensor& first = parts.front().grads[j];
        std::vector<double> acc(first.numel(), 0.0);
        for (const ExampleGrad& p : parts)
            for (std::size_t i = 0; i < acc.size(); ++i)
                acc[i] += static_cast<double>(p.grads[j].at(i));
        Tensor t(first.shape());
        for (std::size_t i = 0; i < acc.size(); ++i)
            t.at(i) = static_cast<float>(acc[i] * inv);
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace

void TrainConfig::validate() const {
    adv.validate();
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive and finite");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (eval_every == 0) throw ConfigError("eval_every must be positive");
    if (early_stop_patience == 0) throw ConfigError("early_stop_patience must be positive");
    if (plateau_patience == 0) throw ConfigError("plateau_patience must be positive");
    if (!(plateau_factor > 0.0) || !(plateau_factor < 1.0))
        throw ConfigError("plateau_factor must lie in (0, 1)");
}

AdamState AdamState::init(const ModelParams& params) {
    AdamState s;
    for (const Tensor* t : params.tensors()) {
        s.m.emplace_back(t->shape());
        s.v.emplace_back(t->shape());
    }
    return s;
}

void adam_step(ModelParams& params, const std::vector<Tensor>& grads, AdamState& state,
               double lr) {
    auto tensors = params.tensors();
    if (grads.size() != tensors.size())
        throw ConfigError("adam_step: " + std::to_string(grads.size()) + " gradients for " +
                          std::to_string(tensors.size()) + " parameter tensors");
    ++state.step;
    const double bc1 = 1.0 - std::pow(AdamState::kBeta1, double(state.step));
    const double bc2 = 1.0 - std::pow(AdamState::kBeta2, double(state.step));
    for (std::size_t j = 0; j < tensors.size(); ++j) {
        Tensor& theta = *tensors[j];
        const Tensor& g = grads[j];
        if (!g.same_shape(theta))
            throw ShapeError("adam_step: gradient shape " + g.shape_string() +
                             " does not match parameter " + theta.shape_string());
        Tensor& m = state.m[j];
        Tensor& v = state.v[j];
        for (std::size_t i = 0; i < theta.numel(); ++i) {
            const double gi = static_cast<double>(g.at(i));
            const double mi = AdamState::kBeta1 * static_cast<double>(m.at(i)) +
                              (1.0 - AdamState::kBeta1) * gi;
            const double vi = AdamState::kBeta2 * static_cast<double>(v.at(i)) +
                              (1.0 - AdamState::kBeta2) * gi * gi;
            m.at(i) = static_cast<float>(mi);
            v.at(i) = static_cast<float>(vi);
            const double update = lr * (mi / bc1) / (std::sqrt(vi / bc2) + AdamState::kEps);
            theta.at(i) = static_cast<float>(static_cast<double>(theta.at(i)) - update);
        }
    }
}

TrainResult train(const TrainConfig& config, const ModelConfig& model,
                  const Dataset& train_set, const Dataset& val_set) {
    config.validate();
    model.validate();
    if (train_set.empty()) throw ConfigError("training set is empty");
    if (val_set.empty()) throw ConfigError("validation set is empty");

    TrainResult result;
    result.params = init_params(model);
    result.report.stop_reason = "max_iterations";
    if (config.max_iterations == 0) return result;

    AdamState adam = AdamState::init(result.params);
    ModelParams best = result.params;
    double best_gap = -std::numeric_limits<double>::infinity();
    std::size_t best_iter = 0;
    bool have_best = false;
    std::size_t plateau_count = 0, stop_count = 0;
    double lr = config.lr;
    double block_loss_sum = 0.0;
    std::size_t block_iters = 0;
    std::size_t iteration = 0;
    bool stop = false;

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    // Runs an eval; returns true when training should stop early.
    auto run_eval = [&](bool count_towards_patience) {
        double val_gap = evaluate(val_set, result.params, model, config.threads).gap;
        EvalPoint pt;
        pt.iteration = iteration;
        pt.val_gap = val_gap;
        pt.lr = lr;
        pt.train_loss = block_iters ? block_loss_sum / double(block_iters) : 0.0;
        result.report.history.push_back(pt);
        block_loss_sum = 0.0;
        block_iters = 0;

        if (!have_best || val_gap - best_gap >= 1e-6) {
            have_best = true;
            best_gap = val_gap;
            best = result.params;
            best_iter = iteration;
            plateau_count = 0;
            stop_count = 0;
            return false;
        }
        if (!count_towards_patience) return false;
        ++plateau_count;
        ++stop_count;
        if (plateau_count >= config.plateau_patience) {
            lr = config.plateau_factor * lr;
            plateau_count = 0;
        }
        return stop_count >= config.early_stop_patience;
    };

    for (std::size_t epoch = 0; !stop; ++epoch) {
        Rng shuffle_rng(Rng::mix(config.seed, epoch));
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < order.size() && !stop;
             start += config.batch_size) {
            const std::size_t count =
                std::min(config.batch_size, order.size() - start);
            std::vector<ExampleGrad> parts(count);
            try {
                parallel_for(count, config.threads, [&](std::size_t i) {
                    parts[i] = example_gradient(train_set.examples[order[start + i]],
                                                result.params, model, config.regime, config.adv);
                });
            } catch (const NumericError& e) {
                throw NumericError("training diverged at iteration " +
                                   std::to_string(iteration + 1) + " (lr=" + format_double(lr) +
                                   "): " + e.what());
            }
            double batch_loss = 0.0;
            for (const ExampleGrad& p : parts) batch_loss += p.loss;
            batch_loss /= double(count);
            if (!std::isfinite(batch_loss))
                throw NumericError("training diverged at iteration " +
                                   std::to_string(iteration + 1) + " (lr=" + format_double(lr) +
                                   "): non-finite batch loss");

            adam_step(result.params, reduce_gradients(parts), adam, lr);
            ++iteration;
            result.report.iteration_losses.push_back(batch_loss);
            block_loss_sum += batch_loss;
            ++block_iters;

            if (iteration % config.eval_every == 0) {
                if (run_eval(/*count_towards_patience=*/true)) {
                    result.report.stop_reason = "early_stop";
                    stop = true;
                }
            }
            if (iteration >= config.max_iterations) stop = true;
        }
    }

    // Terminal eval when the run ended between scheduled evals.
    if (result.report.stop_reason != "early_stop" && iteration % config.eval_every != 0)
        run_eval(/*count_towards_patience=*/false);

    result.report.iterations = iteration;
    if (have_best) {
        result.params = best;
        result.report.best_iteration = best_iter;
        result.report.best_val_gap = best_gap;
    }
    return result;
}

void write_train_report_csv(const std::string& path, const TrainReport& report) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(report.history.size());
    for (const EvalPoint& p : report.history)
        rows.push_back({std::to_string(p.iteration), format_double(p.val_gap),
                        format_double(p.lr), format_double(p.train_loss)});
    write_csv(path, {"iteration", "val_gap", "lr", "train_loss"}, rows);
}

std::vector<SweepPoint> sweep(const TrainConfig& base, const ModelConfig& model,
                              const std::string& param, const std::vector<double>& grid,
                              const Dataset& train_set, const Dataset& val_set) {
    if (param != "epsilon" && param != "alpha")
        throw ConfigError("sweep parameter must be 'epsilon' or 'alpha', got '" + param + "'");
    if (grid.empty()) throw ConfigError("sweep grid is empty");

    std::vector<SweepPoint> points;
    points.reserve(grid.size());
    for (double value : grid) {
        TrainConfig cfg = base;
        if (param == "epsilon")
            cfg.adv.epsilon = value;
        else
            cfg.adv.alpha = value;
        SweepPoint pt;
        pt.param = param;
        pt.value = value;
        try {
            TrainResult res = train(cfg, model, train_set, val_set);
            pt.val_gap = res.report.best_val_gap;
            pt.best_iteration = res.report.best_iteration;
            pt.status = "ok";
        } catch (const std::exception& e) {
            pt.status = std::string("error: ") + e.what();
        }
        points.push_back(std::move(pt));
    }
    return points;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepPoint>& points) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(points.size());
    for (const SweepPoint& p : points)
        rows.push_back({p.param, format_double(p.value), format_double(p.val_gap),
                        std::to_string(p.best_iteration), p.status});
    write_csv(path, {"param", "value", "val_gap", "best_iteration", "status"}, rows);
}

}  // namespace aart
