#include "monas/train.hpp"

#include <algorithm>
#include <cmath>

#include "monas/errors.hpp"

namespace monas {

std::string to_string(TrainStrategy s) {
    switch (s) {
        case TrainStrategy::Standard: return "standard";
        case TrainStrategy::Random: return "random";
        case TrainStrategy::RandomLinear: return "random-linear";
        case TrainStrategy::Sandwich: return "sandwich";
        case TrainStrategy::Kd: return "kd";
        case TrainStrategy::Full: return "full";
    }
    fail("train.strategy", "unknown strategy");
}

TrainStrategy train_strategy_from_string(const std::string& name) {
    if (name == "standard") return TrainStrategy::Standard;
    if (name == "random") return TrainStrategy::Random;
    if (name == "random-linear") return TrainStrategy::RandomLinear;
    if (name == "sandwich") return TrainStrategy::Sandwich;
    if (name == "kd") return TrainStrategy::Kd;
    if (name == "full") return TrainStrategy::Full;
    fail("train.strategy", "unknown strategy: " + name +
                               " (expected standard, random, random-linear, sandwich, kd or full)");
}

void TrainOptions::validate() const {
    require(k >= 1, "train.options", "k must be at least 1");
    require(temperature > 0.0, "train.options", "temperature must be positive");
    require(epochs >= 0, "train.options", "epoch count must be non-negative");
    require(lr > 0.0, "train.options", "learning rate must be positive");
    require(batch_size >= 1, "train.options", "batch size must be at least 1");
}

nlohmann::ordered_json to_json(const TrainReport& report) {
    nlohmann::ordered_json j;
    j["strategy"] = report.strategy;
    j["seed"] = report.seed;
    j["epochs"] = report.epochs;
    j["steps"] = report.steps;
    j["grad_passes"] = report.grad_passes;
    j["wallclock_s"] = report.wallclock_s;
    j["checkpoint"] = report.checkpoint;
    j["loss_trace"] = report.loss_trace;
    return j;
}

namespace {

Batch gather_batch(const Batch& data, const std::vector<int>& order, int begin, int end) {
    Batch out;
    out.seq_len = data.seq_len;
    for (int i = begin; i < end; ++i) {
        const int idx = order[i];
        const int* tok = data.example(idx);
        out.tokens.insert(out.tokens.end(), tok, tok + data.seq_len);
        out.labels.push_back(data.labels[idx]);
    }
    return out;
}

int count_errors(const Matrix& logits, const std::vector<int>& labels, int offset) {
    int errors = 0;
    for (int i = 0; i < logits.rows; ++i) {
        int arg = 0;
        for (int c = 1; c < logits.cols; ++c) {
            if (logits(i, c) > logits(i, arg)) arg = c;
        }
        if (arg != labels[offset + i]) ++errors;
    }
    return errors;
}

}  // namespace

TrainReport train_supernet(SuperNetwork& net, const TaskData& task, const TrainOptions& opt, VirtualClock* clock) {
    opt.validate();
    require(task.train.size() > 0, "train.data", "task has no training examples");

    const SearchSpace space(opt.space, net.dims);
    const MaskPair full = full_mask(net.dims);
    const SubNetConfig cfg_min = space.min_config();
    const SubNetConfig cfg_max = space.max_config();
    const double full_params = static_cast<double>(space.param_count(cfg_max));
    auto rel = [&](const SubNetConfig& c) { return static_cast<double>(space.param_count(c)) / full_params; };

    Adam adam(net, AdamParams{.lr = opt.lr});
    SuperNetwork grads = zeros_like(net);
    Rng rng(opt.seed);
    CostModel cm;

    TrainReport report;
    report.strategy = to_string(opt.strategy);
    report.seed = opt.seed;
    report.epochs = opt.epochs;

    const int n = task.train.size();
    const int steps_per_epoch = (n + opt.batch_size - 1) / opt.batch_size;
    const int steps_total = opt.epochs * steps_per_epoch;
    double cost = 0.0;

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    int step = 0;
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        rng.shuffle(order);
        for (int begin = 0; begin < n; begin += opt.batch_size) {
            const int end = std::min(begin + opt.batch_size, n);
            const Batch batch = gather_batch(task.train, order, begin, end);
            const int b = batch.size();
            zero_all(grads);
            double loss_sum = 0.0;
            int passes = 0;
            std::vector<SubNetConfig> used;

            auto grad_pass = [&](const SubNetConfig& c, const MaskPair& mask, double size_rel,
                                 const KdTeacher* teacher) {
                const LossReport r = loss_and_grads(net, mask, batch, grads, opt.policy, teacher);
                loss_sum += r.loss;
                ++passes;
                used.push_back(c);
                cost += cm.grad_cost(b, size_rel);
            };

            try {
                switch (opt.strategy) {
                    case TrainStrategy::Standard: {
                        grad_pass(cfg_max, full, 1.0, nullptr);
                        break;
                    }
                    case TrainStrategy::Random: {
                        const SubNetConfig c = space.sample_uniform(rng);
                        grad_pass(c, space.create_mask(c), rel(c), nullptr);
                        break;
                    }
                    case TrainStrategy::RandomLinear: {
                        const double p = steps_total > 1 ? static_cast<double>(step) / (steps_total - 1) : 0.0;
                        if (rng.coin(p)) {
                            const SubNetConfig c = space.sample_uniform(rng);
                            grad_pass(c, space.create_mask(c), rel(c), nullptr);
                            ++report.random_branch_steps;
                        } else {
                            grad_pass(cfg_max, full, 1.0, nullptr);
                        }
                        break;
                    }
                    case TrainStrategy::Sandwich: {
                        grad_pass(cfg_min, space.create_mask(cfg_min), rel(cfg_min), nullptr);
                        grad_pass(cfg_max, full, 1.0, nullptr);
                        for (int i = 0; i < opt.k; ++i) {
                            const SubNetConfig c = space.sample_uniform(rng);
                            grad_pass(c, space.create_mask(c), rel(c), nullptr);
                        }
                        break;
                    }
                    case TrainStrategy::Kd: {
                        // teacher = current full network, read-only
                        const Matrix tlogits = forward_masked(net, full, batch, opt.policy);
                        cost += cm.forward_cost(b, 1.0);
                        const KdTeacher teacher{&tlogits, opt.temperature};
                        for (int i = 0; i < opt.k; ++i) {
                            const SubNetConfig c = space.sample_uniform(rng);
                            grad_pass(c, space.create_mask(c), rel(c), &teacher);
                        }
                        break;
                    }
                    case TrainStrategy::Full: {
                        // largest trains on plain CE; its logits teach the rest
                        Matrix tlogits;
                        const LossReport r =
                            loss_and_grads(net, full, batch, grads, opt.policy, nullptr, &tlogits);
                        loss_sum += r.loss;
                        ++passes;
                        used.push_back(cfg_max);
                        cost += cm.grad_cost(b, 1.0);
                        const KdTeacher teacher{&tlogits, opt.temperature};
                        grad_pass(cfg_min, space.create_mask(cfg_min), rel(cfg_min), &teacher);
                        for (int i = 0; i < opt.k; ++i) {
                            const SubNetConfig c = space.sample_uniform(rng);
                            grad_pass(c, space.create_mask(c), rel(c), &teacher);
                        }
                        break;
                    }
                }
            } catch (const Error& e) {
                fail("train.numeric", "training step " + std::to_string(step) + " failed: " + e.what());
            }

            adam.update(net, grads);
            report.loss_trace.push_back(loss_sum / passes);
            report.grad_passes += passes;
            report.step_configs.push_back(std::move(used));
            ++step;
        }
    }
    report.steps = step;
    report.wallclock_s = cost;
    if (clock != nullptr) clock->advance(cost);
    return report;
}

Objective evaluate_subnet(const SuperNetwork& net, const SearchSpace& space, const SubNetConfig& cfg,
                          const TaskData& task, ExecPolicy policy) {
    require(task.val.size() > 0, "train.data", "task has no validation examples");
    const MaskPair mask = space.create_mask(cfg);
    const int n = task.val.size();
    const int chunk = 64;
    int errors = 0;
    for (int begin = 0; begin < n; begin += chunk) {
        const int end = std::min(begin + chunk, n);
        Batch part;
        part.seq_len = task.val.seq_len;
        part.tokens.assign(task.val.tokens.begin() + static_cast<size_t>(begin) * task.val.seq_len,
                           task.val.tokens.begin() + static_cast<size_t>(end) * task.val.seq_len);
        part.labels.assign(task.val.labels.begin() + begin, task.val.labels.begin() + end);
        const Matrix logits = forward_masked(net, mask, part, policy);
        errors += count_errors(logits, task.val.labels, begin);
    }
    Objective obj;
    obj.f0 = static_cast<double>(errors) / n;
    obj.f1 = static_cast<double>(space.param_count(cfg));
    return obj;
}

StandaloneFinetune::StandaloneFinetune(const SuperNetwork& pretrained, const SearchSpace& space,
                                       const SubNetConfig& cfg, const TaskData& task, const TrainOptions& opt)
    : task_(task), space_(space), cfg_(cfg), opt_(opt), net_(pretrained), rng_(opt.seed) {
    opt_.validate();
    space_.validate(cfg_);
    require(task.train.size() > 0 && task.val.size() > 0, "train.data", "task needs train and validation examples");
    mask_ = space_.create_mask(cfg_);
    adam_ = std::make_unique<Adam>(net_, AdamParams{.lr = opt_.lr});
    rel_ = static_cast<double>(space_.param_count(cfg_)) / space_.param_count(space_.max_config());
    order_.resize(task.train.size());
    for (size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
}

Objective StandaloneFinetune::run_to_epoch(int epoch_target) {
    require(epoch_target >= completed_epochs_, "train.rung",
            "cannot rewind a fine-tuning run to an earlier epoch");
    const int n = task_.train.size();
    std::vector<int>& order = order_;
    SuperNetwork grads = zeros_like(net_);
    CostModel cm;
    while (completed_epochs_ < epoch_target) {
        rng_.shuffle(order);
        for (int begin = 0; begin < n; begin += opt_.batch_size) {
            const int end = std::min(begin + opt_.batch_size, n);
            const Batch batch = gather_batch(task_.train, order, begin, end);
            zero_all(grads);
            try {
                loss_and_grads(net_, mask_, batch, grads, opt_.policy);
            } catch (const Error& e) {
                fail("train.numeric",
                     "fine-tune epoch " + std::to_string(completed_epochs_) + " failed: " + e.what());
            }
            adam_->update(net_, grads);
            cost_ += cm.grad_cost(batch.size(), rel_);
        }
        ++completed_epochs_;
    }
    Objective obj = evaluate_subnet(net_, space_, cfg_, task_, opt_.policy);
    cost_ += cm.eval_cost(task_.val.size(), rel_);
    return obj;
}

Objective finetune_subnet_standalone(const SuperNetwork& pretrained, const SearchSpace& space, const SubNetConfig& cfg,
                                     const TaskData& task, const TrainOptions& opt, VirtualClock* clock) {
    StandaloneFinetune run(pretrained, space, cfg, task, opt);
    const Objective obj = run.run_to_epoch(opt.epochs);
    if (clock != nullptr) clock->advance(run.virtual_cost());
    return obj;
}

}  // namespace monas
