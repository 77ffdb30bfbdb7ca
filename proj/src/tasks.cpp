#include "monas/tasks.hpp"

#include <algorithm>

#include "monas/errors.hpp"
#include "monas/rng.hpp"

namespace monas {

namespace {
constexpr int kMaxRejectionTries = 1000000;

bool known_task(const std::string& name) { return name == "majority" || name == "match" || name == "pattern"; }
}  // namespace

void TaskSpec::validate() const {
    require(known_task(name), "tasks.name", "unknown task name: " + name + " (expected majority, match or pattern)");
    require(classes >= 2, "tasks.classes", "tasks need at least 2 classes");
    require(vocab >= classes, "tasks.vocab", "vocabulary must be at least as large as the class count");
    require(seq_len >= 3, "tasks.seq_len", "sequence length must be at least 3");
    require(train_n >= 0 && val_n >= 0 && test_n >= 0, "tasks.sizes", "split sizes must be non-negative");
    require(train_n + val_n + test_n > 0, "tasks.sizes", "task has no examples");
    if (name == "match" || name == "pattern") {
        require(classes == 2, "tasks.classes", name + " is a binary task");
    }
}

TaskSpec make_task_spec(const std::string& name, int vocab, int seq_len, int classes, int total, int test_n,
                        uint64_t seed) {
    require(total > 0, "tasks.sizes", "total example count must be positive");
    TaskSpec spec;
    spec.name = name;
    spec.vocab = vocab;
    spec.seq_len = seq_len;
    spec.classes = classes;
    spec.train_n = (total * 7) / 10;
    spec.val_n = total - spec.train_n;
    spec.test_n = test_n;
    spec.seed = seed;
    spec.validate();
    return spec;
}

int task_label(const TaskSpec& spec, const std::vector<int>& pattern, const int* tokens) {
    const int n = spec.seq_len;
    if (spec.name == "majority") {
        std::vector<int> count(spec.classes, 0);
        for (int t = 0; t < n; ++t) ++count[tokens[t] % spec.classes];
        int best = 0;
        for (int c = 1; c < spec.classes; ++c) {
            if (count[c] > count[best]) best = c;
        }
        return best;
    }
    if (spec.name == "match") {
        return tokens[0] == tokens[n - 1] ? 1 : 0;
    }
    // pattern
    for (int t = 0; t + 2 < n; ++t) {
        if (tokens[t] == pattern[0] && tokens[t + 1] == pattern[1] && tokens[t + 2] == pattern[2]) return 1;
    }
    return 0;
}

namespace {

void fill_split(Batch& batch, int count, const TaskSpec& spec, const std::vector<int>& pattern, Rng& rng) {
    batch.seq_len = spec.seq_len;
    batch.tokens.reserve(static_cast<size_t>(count) * spec.seq_len);
    batch.labels.reserve(count);
    std::vector<int> seq(spec.seq_len);
    for (int i = 0; i < count; ++i) {
        const int target = i % spec.classes;
        bool found = false;
        for (int attempt = 0; attempt < kMaxRejectionTries; ++attempt) {
            for (int t = 0; t < spec.seq_len; ++t) seq[t] = rng.uniform_int(0, spec.vocab - 1);
            if (task_label(spec, pattern, seq.data()) == target) {
                found = true;
                break;
            }
        }
        require(found, "tasks.rejection", "could not sample an example of class " + std::to_string(target));
        batch.tokens.insert(batch.tokens.end(), seq.begin(), seq.end());
        batch.labels.push_back(target);
    }
}

}  // namespace

TaskData generate_task(const TaskSpec& spec) {
    spec.validate();
    TaskData data;
    data.spec = spec;
    Rng rng(spec.seed);
    if (spec.name == "pattern") {
        data.pattern = {rng.uniform_int(0, spec.vocab - 1), rng.uniform_int(0, spec.vocab - 1),
                        rng.uniform_int(0, spec.vocab - 1)};
    }
    fill_split(data.train, spec.train_n, spec, data.pattern, rng);
    fill_split(data.val, spec.val_n, spec, data.pattern, rng);
    fill_split(data.test, spec.test_n, spec, data.pattern, rng);
    return data;
}

}  // namespace monas
