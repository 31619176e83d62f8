#include "swphm/text_classify.hpp"

#include "swphm/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace swphm {

namespace {

constexpr double kSumTolerance = 1e-9;

// Scores closer than this are treated as ties, so that summation order
// cannot decide between symmetric classes.
bool nearly_equal(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

std::size_t argmax_with_ties(const std::vector<double>& scores) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best] && !nearly_equal(scores[i], scores[best])) best = i;
    }
    return best;
}

} // namespace

TokenStream tokenize(std::string_view text) {
    TokenStream out;
    std::string current;
    auto flush = [&] {
        if (current.size() >= 2) out.push_back(current);
        current.clear();
    };
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (c < 0x80 && std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

NbModel::NbModel(std::vector<std::string> classes, std::vector<double> priors, std::vector<std::string> vocabulary,
                 std::vector<std::vector<double>> likelihoods, double alpha)
    : classes_(std::move(classes)),
      priors_(std::move(priors)),
      vocabulary_(std::move(vocabulary)),
      likelihoods_(std::move(likelihoods)),
      alpha_(alpha) {
    if (!(alpha_ > 0.0)) fail(ErrorCode::validation, "naive Bayes: smoothing alpha must be positive");
    if (classes_.size() < 2) fail(ErrorCode::validation, "naive Bayes: at least two classes required");
    if (!std::is_sorted(classes_.begin(), classes_.end()) ||
        std::adjacent_find(classes_.begin(), classes_.end()) != classes_.end()) {
        fail(ErrorCode::validation, "naive Bayes: classes must be unique and sorted");
    }
    if (vocabulary_.empty()) fail(ErrorCode::validation, "naive Bayes: empty vocabulary");
    if (priors_.size() != classes_.size() || likelihoods_.size() != classes_.size()) {
        fail(ErrorCode::validation, "naive Bayes: parameter shapes do not match the class list");
    }
    for (std::size_t w = 0; w < vocabulary_.size(); ++w) {
        if (!word_index_.emplace(vocabulary_[w], w).second) {
            fail(ErrorCode::validation, "naive Bayes: duplicate vocabulary word '" + vocabulary_[w] + "'");
        }
    }
    const double prior_sum = std::accumulate(priors_.begin(), priors_.end(), 0.0);
    if (std::abs(prior_sum - 1.0) > kSumTolerance) fail(ErrorCode::validation, "naive Bayes: priors do not sum to 1");
    for (std::size_t c = 0; c < classes_.size(); ++c) {
        const auto& row = likelihoods_[c];
        if (row.size() != vocabulary_.size()) {
            fail(ErrorCode::validation, "naive Bayes: likelihood row size mismatch for '" + classes_[c] + "'");
        }
        if (!(priors_[c] > 0.0)) fail(ErrorCode::validation, "naive Bayes: non-positive prior");
        double sum = 0.0;
        for (double p : row) {
            if (!(p > 0.0)) fail(ErrorCode::validation, "naive Bayes: non-positive likelihood");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kSumTolerance) {
            fail(ErrorCode::validation, "naive Bayes: likelihoods of '" + classes_[c] + "' do not sum to 1");
        }
    }
    log_priors_.resize(priors_.size());
    std::transform(priors_.begin(), priors_.end(), log_priors_.begin(), [](double p) { return std::log(p); });
    log_likelihoods_.resize(likelihoods_.size());
    for (std::size_t c = 0; c < likelihoods_.size(); ++c) {
        log_likelihoods_[c].resize(likelihoods_[c].size());
        std::transform(likelihoods_[c].begin(), likelihoods_[c].end(), log_likelihoods_[c].begin(),
                       [](double p) { return std::log(p); });
    }
}

std::size_t NbModel::class_index(std::string_view label) const {
    auto it = std::lower_bound(classes_.begin(), classes_.end(), label);
    if (it == classes_.end() || *it != label) {
        fail(ErrorCode::validation, "naive Bayes: unknown class '" + std::string(label) + "'");
    }
    return static_cast<std::size_t>(it - classes_.begin());
}

std::ptrdiff_t NbModel::word_index(std::string_view word) const {
    auto it = word_index_.find(std::string(word));
    return it == word_index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

double NbModel::likelihood(std::string_view word, std::string_view label) const {
    const auto w = word_index(word);
    if (w < 0) fail(ErrorCode::validation, "naive Bayes: word '" + std::string(word) + "' not in vocabulary");
    return likelihoods_[class_index(label)][static_cast<std::size_t>(w)];
}

double NbModel::prior(std::string_view label) const {
    return priors_[class_index(label)];
}

NbModel train_nb(std::span<const LabeledDoc> docs, double alpha, std::span<const std::string> labels) {
    if (!(alpha > 0.0)) fail(ErrorCode::validation, "naive Bayes: smoothing alpha must be positive");

    std::set<std::string> class_set;
    if (!labels.empty()) {
        class_set.insert(labels.begin(), labels.end());
    } else {
        for (const auto& d : docs) class_set.insert(d.label);
    }
    if (class_set.size() < 2) fail(ErrorCode::validation, "naive Bayes: at least two labels required");

    std::set<std::string> vocab_set;
    for (const auto& d : docs) vocab_set.insert(d.tokens.begin(), d.tokens.end());
    if (vocab_set.empty()) fail(ErrorCode::validation, "naive Bayes: empty vocabulary");

    std::vector<std::string> classes(class_set.begin(), class_set.end());
    std::vector<std::string> vocabulary(vocab_set.begin(), vocab_set.end());
    std::map<std::string, std::size_t> class_pos;
    for (std::size_t c = 0; c < classes.size(); ++c) class_pos[classes[c]] = c;
    std::map<std::string, std::size_t> word_pos;
    for (std::size_t w = 0; w < vocabulary.size(); ++w) word_pos[vocabulary[w]] = w;

    std::vector<std::size_t> doc_count(classes.size(), 0);
    std::vector<std::size_t> token_count(classes.size(), 0);
    std::vector<std::vector<std::size_t>> word_count(classes.size(), std::vector<std::size_t>(vocabulary.size(), 0));
    for (const auto& d : docs) {
        auto it = class_pos.find(d.label);
        if (it == class_pos.end()) {
            fail(ErrorCode::validation, "naive Bayes: document label '" + d.label + "' not in label set");
        }
        const std::size_t c = it->second;
        ++doc_count[c];
        for (const auto& t : d.tokens) {
            ++word_count[c][word_pos.at(t)];
            ++token_count[c];
        }
    }
    for (std::size_t c = 0; c < classes.size(); ++c) {
        if (doc_count[c] == 0) fail(ErrorCode::validation, "naive Bayes: label '" + classes[c] + "' has no documents");
    }

    const double total_docs = static_cast<double>(docs.size());
    const double v = static_cast<double>(vocabulary.size());
    std::vector<double> priors(classes.size());
    std::vector<std::vector<double>> likelihoods(classes.size(), std::vector<double>(vocabulary.size()));
    for (std::size_t c = 0; c < classes.size(); ++c) {
        priors[c] = static_cast<double>(doc_count[c]) / total_docs;
        const double denom = static_cast<double>(token_count[c]) + alpha * v;
        for (std::size_t w = 0; w < vocabulary.size(); ++w) {
            likelihoods[c][w] = (static_cast<double>(word_count[c][w]) + alpha) / denom;
        }
    }
    return NbModel(std::move(classes), std::move(priors), std::move(vocabulary), std::move(likelihoods), alpha);
}

NbPrediction classify_nb(const NbModel& model, const TokenStream& doc) {
    if (!model.trained()) fail(ErrorCode::not_trained, "naive Bayes: model is not trained");
    const std::size_t n_classes = model.classes().size();
    std::vector<double> scores = model.log_priors();
    bool evidence = false;
    for (const auto& token : doc) {
        const auto w = model.word_index(token);
        if (w < 0) continue;
        evidence = true;
        for (std::size_t c = 0; c < n_classes; ++c) {
            scores[c] += model.log_likelihoods()[c][static_cast<std::size_t>(w)];
        }
    }

    NbPrediction out;
    if (!evidence) {
        out.no_evidence = true;
        out.posteriors = model.priors();
        out.label = model.classes()[argmax_with_ties(model.priors())];
        return out;
    }
    const std::size_t best = argmax_with_ties(scores);
    const double top = *std::max_element(scores.begin(), scores.end());
    out.posteriors.resize(n_classes);
    double norm = 0.0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        out.posteriors[c] = std::exp(scores[c] - top);
        norm += out.posteriors[c];
    }
    for (auto& p : out.posteriors) p /= norm;
    out.label = model.classes()[best];
    return out;
}

nlohmann::json to_json(const NbModel& model) {
    if (!model.trained()) fail(ErrorCode::not_trained, "naive Bayes: cannot serialize an untrained model");
    return {{"classes", model.classes()},
            {"priors", model.priors()},
            {"vocabulary", model.vocabulary()},
            {"likelihoods", model.likelihoods()},
            {"alpha", model.alpha()}};
}

NbModel nb_model_from_json(const nlohmann::json& doc) {
    try {
        return NbModel(doc.at("classes").get<std::vector<std::string>>(), doc.at("priors").get<std::vector<double>>(),
                       doc.at("vocabulary").get<std::vector<std::string>>(),
                       doc.at("likelihoods").get<std::vector<std::vector<double>>>(), doc.at("alpha").get<double>());
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::validation, std::string("naive Bayes model: ") + e.what());
    }
}

} // namespace swphm
