#include "fssfda/dataset.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "fssfda/error.hpp"

namespace fs = std::filesystem;

namespace fssfda {

namespace {

bool has_image_extension(const fs::path& p) {
    static const std::set<std::string> kExts = {".ppm", ".pgm", ".png", ".jpg", ".jpeg", ".bmp"};
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return kExts.count(ext) > 0;
}

}  // namespace

std::vector<int> DomainDataset::class_counts() const {
    std::vector<int> counts(vocabulary.size(), 0);
    for (const auto& ex : examples) {
        if (ex.class_id >= 0 && ex.class_id < static_cast<int>(counts.size())) {
            counts[static_cast<std::size_t>(ex.class_id)]++;
        }
    }
    return counts;
}

const LabeledExample* DomainDataset::find(const std::string& example_id) const {
    auto it = std::lower_bound(examples.begin(), examples.end(), example_id,
                               [](const LabeledExample& e, const std::string& id) { return e.example_id < id; });
    if (it != examples.end() && it->example_id == example_id) return &*it;
    return nullptr;
}

DomainDataset scan_image_folder(const fs::path& root, const std::string& domain) {
    const fs::path domain_dir = root / domain;
    if (!fs::is_directory(domain_dir)) {
        throw IngestionError("missing domain directory: " + domain_dir.string());
    }

    std::vector<std::string> class_names;
    for (const auto& entry : fs::directory_iterator(domain_dir)) {
        if (entry.is_directory()) class_names.push_back(entry.path().filename().string());
    }
    std::sort(class_names.begin(), class_names.end());
    if (class_names.size() < 2) {
        throw IngestionError("domain '" + domain + "' has " + std::to_string(class_names.size()) +
                             " class directories; at least 2 required");
    }

    DomainDataset ds;
    ds.domain_id = domain;
    ds.vocabulary = class_names;

    for (std::size_t c = 0; c < class_names.size(); ++c) {
        const fs::path class_dir = domain_dir / class_names[c];
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(class_dir)) {
            if (entry.is_regular_file() && has_image_extension(entry.path())) {
                files.push_back(entry.path());
            }
        }
        if (files.empty()) {
            throw IngestionError("class directory '" + class_names[c] + "' of domain '" + domain +
                                 "' contains no images");
        }
        for (const auto& f : files) {
            LabeledExample ex;
            ex.example_id = class_names[c] + "/" + f.filename().string();
            ex.image_ref = f;
            ex.class_id = static_cast<int>(c);
            ex.domain_id = domain;
            ds.examples.push_back(std::move(ex));
        }
    }

    std::sort(ds.examples.begin(), ds.examples.end(),
              [](const LabeledExample& a, const LabeledExample& b) { return a.example_id < b.example_id; });
    return ds;
}

DomainDataset subset_by_ids(const DomainDataset& ds, const std::vector<std::string>& ids) {
    std::unordered_set<std::string> wanted(ids.begin(), ids.end());
    DomainDataset out;
    out.domain_id = ds.domain_id;
    out.vocabulary = ds.vocabulary;
    for (const auto& ex : ds.examples) {
        if (wanted.count(ex.example_id)) out.examples.push_back(ex);
    }
    if (out.examples.size() != wanted.size()) {
        throw SamplingError("subset_by_ids: " + std::to_string(wanted.size() - out.examples.size()) +
                            " requested ids not present in dataset '" + ds.domain_id + "'");
    }
    return out;
}

bool same_vocabulary(const DomainDataset& a, const DomainDataset& b) { return a.vocabulary == b.vocabulary; }

}  // namespace fssfda
