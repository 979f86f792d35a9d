#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fssfda {

// Reserved class id for out-of-vocabulary examples in OoD training sets.
// Adaptation code must never read it; evaluation ignores such examples.
inline constexpr int kUnknownLabel = -1;

struct LabeledExample {
    std::string example_id;            // unique within a DomainDataset
    std::filesystem::path image_ref;   // where the pixels live
    int class_id = 0;                  // [0, K) or kUnknownLabel
    std::string domain_id;
};

// One domain's labeled image index over a shared class vocabulary.
// Examples are ordered lexicographically by example_id; class ids are dense
// over the vocabulary.
struct DomainDataset {
    std::string domain_id;
    std::vector<LabeledExample> examples;
    std::vector<std::string> vocabulary;

    int num_classes() const { return static_cast<int>(vocabulary.size()); }
    int size() const { return static_cast<int>(examples.size()); }

    // Per-class example counts (unknown-labeled examples are not counted).
    std::vector<int> class_counts() const;

    const LabeledExample* find(const std::string& example_id) const;
};

// Scans <root>/<domain>/<class_name>/<image files>. The vocabulary is the
// sorted list of class directory names; examples are ordered by example_id
// (class_name/file_name), so two scans of the same tree are identical.
DomainDataset scan_image_folder(const std::filesystem::path& root, const std::string& domain);

// Restricts a dataset to the given example ids, keeping order and vocabulary.
DomainDataset subset_by_ids(const DomainDataset& ds, const std::vector<std::string>& ids);

bool same_vocabulary(const DomainDataset& a, const DomainDataset& b);

}  // namespace fssfda
