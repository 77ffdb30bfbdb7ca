#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "monas/model.hpp"

namespace monas {

// Synthetic token-classification tasks with pure, deterministic label
// functions:
//   majority: tokens fall into residue classes (token mod class count);
//             the label is the most frequent class, smallest class wins
//             ties. With 2 classes: are even or odd tokens the majority.
//   match:    1 if the first and last token are equal, else 0.
//   pattern:  1 if a fixed trigram (drawn once from the task seed) occurs
//             contiguously, else 0.
struct TaskSpec {
    std::string name = "majority";
    int vocab = 32;
    int seq_len = 16;
    int classes = 2;
    int train_n = 0;
    int val_n = 0;
    int test_n = 0;
    uint64_t seed = 0;

    void validate() const;
};

// 70/30 train/validation split of `total` examples.
TaskSpec make_task_spec(const std::string& name, int vocab, int seq_len, int classes, int total, int test_n,
                        uint64_t seed);

struct TaskData {
    TaskSpec spec;
    std::vector<int> pattern;  // the trigram for "pattern" tasks, else empty
    Batch train, val, test;
};

int task_label(const TaskSpec& spec, const std::vector<int>& pattern, const int* tokens);

// Deterministic generation: the same spec yields byte-identical datasets.
// Classes are balanced exactly (alternating target labels, rejection
// sampling of token sequences until the label function agrees).
TaskData generate_task(const TaskSpec& spec);

}  // namespace monas
