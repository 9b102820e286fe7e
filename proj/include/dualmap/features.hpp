#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace dualmap {

/// Opaque semantic embedding. The engine never interprets individual
/// dimensions; it only compares vectors by cosine similarity.
class FeatureVec {
public:
    FeatureVec() = default;
    /// Wraps the values as given. Throws DataError on non-finite or all-zero input.
    explicit FeatureVec(Eigen::VectorXd values);
    explicit FeatureVec(std::span<const double> values);

    /// L2-normalized copy of `values`; throws DataError if the norm is zero.
    static FeatureVec normalized(const Eigen::VectorXd& values);
    static FeatureVec basis(std::size_t dim, std::size_t axis);

    const Eigen::VectorXd& values() const { return values_; }
    std::size_t dim() const { return static_cast<std::size_t>(values_.size()); }
    double norm() const { return values_.norm(); }
    bool empty() const { return values_.size() == 0; }

    bool operator==(const FeatureVec& other) const;

private:
    Eigen::VectorXd values_;
};

inline constexpr double kDefaultImageWeight = 0.7;
inline constexpr double kDefaultTextWeight = 0.3;

/// Weighted image/text feature, renormalized to unit length.
FeatureVec combine(const FeatureVec& image_feat, const FeatureVec& text_feat,
                   double w_image = kDefaultImageWeight, double w_text = kDefaultTextWeight);

/// Normalized arithmetic mean. Used for the null-class text feature and the
/// anchor template.
FeatureVec normalized_mean(std::span<const FeatureVec> feats);

inline FeatureVec null_class_text_feature(std::span<const FeatureVec> vocab_text_feats) {
    return normalized_mean(vocab_text_feats);
}

/// Cosine similarity clamped to [-1, 1].
double cosine(const FeatureVec& a, const FeatureVec& b);

/// One class of a synthetic vocabulary. `groups` couples classes that share a
/// latent direction (e.g. "static" for furniture, a room type for co-located
/// items); the weights are the cosine each class has with the group axis.
struct SyntheticClass {
    std::string name;
    std::map<std::string, double> groups;
};

/// Deterministic stand-in for a text/image embedder.
class SyntheticVocabulary {
public:
    struct Options {
        std::size_t dim = 512;
        std::uint64_t seed = 7;
        double noise = 0.3;          ///< norm of the per-instance perturbation
        double ceiling = 0.75;       ///< max pairwise cosine between base vectors
        int max_attempts = 64;       ///< rejection-sampling rounds per class
    };

    SyntheticVocabulary(std::vector<SyntheticClass> classes, Options options);
    SyntheticVocabulary(std::vector<std::string> names, Options options);

    const std::vector<SyntheticClass>& classes() const { return classes_; }
    std::vector<std::string> names() const;
    const Options& options() const { return options_; }
    std::size_t dim() const { return options_.dim; }

    bool has(const std::string& name) const { return index_.count(name) > 0; }
    std::size_t index_of(const std::string& name) const;

    /// Base (text) feature for a class; throws DataError for unknown classes.
    const FeatureVec& base(const std::string& name) const;
    const std::vector<FeatureVec>& bases() const { return bases_; }

    /// Normalized mean of all class base vectors.
    const FeatureVec& null_text() const { return null_text_; }

    /// Base vector perturbed by seeded noise, renormalized.
    FeatureVec embed(const std::string& name, std::uint64_t instance_seed) const;

    /// Index of the base vector most similar to `f` (lowest index on ties).
    std::size_t nearest_class(const FeatureVec& f) const;

private:
    std::vector<SyntheticClass> classes_;
    Options options_;
    std::map<std::string, std::size_t> index_;
    std::vector<FeatureVec> bases_;
    FeatureVec null_text_;
};

inline FeatureVec synth_embed(const SyntheticVocabulary& vocab, const std::string& name,
                              std::uint64_t instance_seed) {
    return vocab.embed(name, instance_seed);
}

/// Uniformly random unit vector from the given generator seed.
FeatureVec random_unit_feature(std::size_t dim, std::uint64_t seed);

}  // namespace dualmap
