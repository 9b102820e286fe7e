#include "dualmap/features.hpp"

#include "dualmap/error.hpp"
#include "dualmap/rng.hpp"

#include <algorithm>
#include <cmath>

namespace dualmap {

namespace {

constexpr double kUnitTolerance = 1e-5;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Eigen::VectorXd gaussian_direction(std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    do {
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.gaussian();
    } while (v.norm() == 0.0);
    return v / v.norm();
}

void require_same_dim(const FeatureVec& a, const FeatureVec& b) {
    if (a.dim() != b.dim()) {
        throw DataError("feature dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                        std::to_string(b.dim()));
    }
}

void require_unit(const FeatureVec& f, const char* what) {
    if (std::abs(f.norm() - 1.0) > kUnitTolerance) {
        throw DataError(std::string(what) + " is not unit-norm");
    }
}

}  // namespace

FeatureVec::FeatureVec(Eigen::VectorXd values) : values_(std::move(values)) {
    if (!values_.allFinite()) throw DataError("feature has non-finite values");
    if (values_.size() > 0 && values_.squaredNorm() == 0.0) throw DataError("zero feature vector");
}

FeatureVec::FeatureVec(std::span<const double> values)
    : FeatureVec(Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                   static_cast<Eigen::Index>(values.size()))) {}

FeatureVec FeatureVec::normalized(const Eigen::VectorXd& values) {
    const double n = values.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw DataError("cannot normalize a zero or non-finite vector");
    return FeatureVec(Eigen::VectorXd(values / n));
}

FeatureVec FeatureVec::basis(std::size_t dim, std::size_t axis) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    v[static_cast<Eigen::Index>(axis)] = 1.0;
    return FeatureVec(std::move(v));
}

bool FeatureVec::operator==(const FeatureVec& other) const {
    return values_.size() == other.values_.size() && values_ == other.values_;
}

FeatureVec combine(const FeatureVec& image_feat, const FeatureVec& text_feat, double w_image,
                   double w_text) {
    require_same_dim(image_feat, text_feat);
    if (w_image < 0.0 || w_text < 0.0 || !(w_image + w_text > 0.0)) {
        throw UsageError("combination weights must be non-negative with a positive sum");
    }
    require_unit(image_feat, "image feature");
    require_unit(text_feat, "text feature");
    const Eigen::VectorXd sum = w_image * image_feat.values() + w_text * text_feat.values();
    if (sum.norm() <= 1e-12) throw DataError("degenerate combination");
    return FeatureVec::normalized(sum);
}

FeatureVec normalized_mean(std::span<const FeatureVec> feats) {
    if (feats.empty()) throw DataError("cannot average an empty feature list");
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(feats.front().dim()));
    for (const auto& f : feats) {
        require_same_dim(feats.front(), f);
        sum += f.values();
    }
    if (sum.norm() <= 1e-12) throw DataError("mean feature is zero");
    return FeatureVec::normalized(sum);
}

double cosine(const FeatureVec& a, const FeatureVec& b) {
    require_same_dim(a, b);
    // Sums run in index order so that the result is reproducible bit for bit.
    double dot = 0.0, na = 0.0, nb = 0.0;
    const auto& x = a.values();
    const auto& y = b.values();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        dot += x[i] * y[i];
        na += x[i] * x[i];
        nb += y[i] * y[i];
    }
    const double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, -1.0, 1.0);
}

FeatureVec random_unit_feature(std::size_t dim, std::uint64_t seed) {
    return FeatureVec(gaussian_direction(dim, seed));
}

SyntheticVocabulary::SyntheticVocabulary(std::vector<std::string> names, Options options)
    : SyntheticVocabulary(
          [&] {
              std::vector<SyntheticClass> classes;
              for (auto& n : names) classes.push_back({std::move(n), {}});
              return classes;
          }(),
          options) {}

SyntheticVocabulary::SyntheticVocabulary(std::vector<SyntheticClass> classes, Options options)
    : classes_(std::move(classes)), options_(options) {
    if (classes_.empty()) throw UsageError("vocabulary has no classes");
    if (options_.dim < 2) throw UsageError("feature dimension must be at least 2");
    if (options_.noise < 0.0) throw UsageError("noise scale must be non-negative");

    std::map<std::string, Eigen::VectorXd> group_axes;
    for (std::size_t i = 0; i < classes_.size(); ++i) {
        const auto& c = classes_[i];
        if (c.name.empty()) throw UsageError("empty class name");
        if (!index_.emplace(c.name, i).second) throw UsageError("duplicate class '" + c.name + "'");
        double w2 = 0.0;
        for (const auto& [g, w] : c.groups) {
            if (w < 0.0) throw UsageError("negative group weight for '" + c.name + "'");
            w2 += w * w;
            if (!group_axes.count(g)) {
                group_axes.emplace(g, gaussian_direction(options_.dim,
                                                         hash_combine(options_.seed ^ 0x67726f7570ULL, fnv1a(g))));
            }
        }
        if (w2 >= 1.0) throw UsageError("group weights of '" + c.name + "' exceed unit norm");

        bool accepted = false;
        for (int attempt = 0; attempt < options_.max_attempts && !accepted; ++attempt) {
            Eigen::VectorXd v = std::sqrt(1.0 - w2) *
                                gaussian_direction(options_.dim,
                                                   hash_combine(hash_combine(options_.seed, fnv1a(c.name)),
                                                                static_cast<std::uint64_t>(attempt)));
            for (const auto& [g, w] : c.groups) v += w * group_axes.at(g);
            FeatureVec candidate = FeatureVec::normalized(v);
            accepted = std::all_of(bases_.begin(), bases_.end(), [&](const FeatureVec& b) {
                return cosine(b, candidate) < options_.ceiling;
            });
            if (accepted) bases_.push_back(std::move(candidate));
        }
        if (!accepted) {
            throw UsageError("could not place class '" + c.name + "' below the similarity ceiling");
        }
    }
    null_text_ = normalized_mean(bases_);
}

std::vector<std::string> SyntheticVocabulary::names() const {
    std::vector<std::string> out;
    out.reserve(classes_.size());
    for (const auto& c : classes_) out.push_back(c.name);
    return out;
}

std::size_t SyntheticVocabulary::index_of(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) throw DataError("unknown class '" + name + "'");
    return it->second;
}

const FeatureVec& SyntheticVocabulary::base(const std::string& name) const {
    return bases_[index_of(name)];
}

FeatureVec SyntheticVocabulary::embed(const std::string& name, std::uint64_t instance_seed) const {
    const auto idx = index_of(name);
    if (options_.noise == 0.0) return bases_[idx];
    const Eigen::VectorXd n = gaussian_direction(
        options_.dim, hash_combine(hash_combine(options_.seed ^ 0x6e6f697365ULL, idx), instance_seed));
    return FeatureVec::normalized(bases_[idx].values() + options_.noise * n);
}

std::size_t SyntheticVocabulary::nearest_class(const FeatureVec& f) const {
    std::size_t best = 0;
    double best_cos = -2.0;
    for (std::size_t i = 0; i < bases_.size(); ++i) {
        const double c = cosine(f, bases_[i]);
        if (c > best_cos) {
            best_cos = c;
            best = i;
        }
    }
    return best;
}

}  // namespace dualmap
