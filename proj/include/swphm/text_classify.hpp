#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace swphm {

/// Lowercase word tokens in document order.
using TokenStream = std::vector<std::string>;

/// Lowercases, splits on runs of non-alphanumeric ASCII characters and drops
/// tokens shorter than two characters. No stemming, no stop words.
TokenStream tokenize(std::string_view text);

struct LabeledDoc {
    TokenStream tokens;
    std::string label;
};

/// Multinomial naive Bayes with additive (Laplace) smoothing.
///
/// Probabilities are stored as-is so that JSON round-trips are exact; the log
/// tables used for scoring are derived from them. Classes are kept in
/// lexicographic order, which is also the tie-break order.
class NbModel {
public:
    NbModel() = default;

    /// Assembles a model from stored parameters, checking that the priors and
    /// every class-conditional distribution sum to one.
    NbModel(std::vector<std::string> classes, std::vector<double> priors, std::vector<std::string> vocabulary,
            std::vector<std::vector<double>> likelihoods, double alpha);

    bool trained() const { return !classes_.empty(); }

    const std::vector<std::string>& classes() const { return classes_; }
    const std::vector<double>& priors() const { return priors_; }
    const std::vector<std::string>& vocabulary() const { return vocabulary_; }
    const std::vector<std::vector<double>>& likelihoods() const { return likelihoods_; }
    double alpha() const { return alpha_; }

    /// P(word | class); throws for unknown class or word.
    double likelihood(std::string_view word, std::string_view label) const;
    double prior(std::string_view label) const;

    std::size_t class_index(std::string_view label) const;
    /// Index of `word` in the vocabulary or -1.
    std::ptrdiff_t word_index(std::string_view word) const;

    const std::vector<double>& log_priors() const { return log_priors_; }
    const std::vector<std::vector<double>>& log_likelihoods() const { return log_likelihoods_; }

    bool operator==(const NbModel& other) const {
        return classes_ == other.classes_ && priors_ == other.priors_ && vocabulary_ == other.vocabulary_ &&
               likelihoods_ == other.likelihoods_ && alpha_ == other.alpha_;
    }

private:
    std::vector<std::string> classes_;
    std::vector<double> priors_;
    std::vector<std::string> vocabulary_;
    std::vector<std::vector<double>> likelihoods_;
    double alpha_ = 1.0;

    std::vector<double> log_priors_;
    std::vector<std::vector<double>> log_likelihoods_;
    std::unordered_map<std::string, std::size_t> word_index_;
};

/// Trains on `docs`. When `labels` is non-empty it fixes the class set and every
/// listed label must have at least one document.
NbModel train_nb(std::span<const LabeledDoc> docs, double alpha = 1.0, std::span<const std::string> labels = {});

struct NbPrediction {
    std::string label;
    std::vector<double> posteriors; // aligned with NbModel::classes()
    bool no_evidence = false;       // no token was in the vocabulary; priors returned
};

NbPrediction classify_nb(const NbModel& model, const TokenStream& doc);

nlohmann::json to_json(const NbModel& model);
NbModel nb_model_from_json(const nlohmann::json& doc);

} // namespace swphm
