#include "swphm/error.hpp"
#include "swphm/random.hpp"
#include "swphm/text_classify.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

using namespace swphm;
using json = nlohmann::json;

namespace {

std::vector<LabeledDoc> hand_corpus() {
    return {{tokenize("crash error"), "fault"},
            {tokenize("error timeout"), "fault"},
            {tokenize("add feature"), "enhancement"},
            {tokenize("feature request"), "enhancement"}};
}

// Direct transcription of the Laplace estimate, counted from scratch.
double oracle_likelihood(const std::vector<LabeledDoc>& docs, const std::string& word, const std::string& label,
                         double alpha) {
    std::set<std::string> vocab;
    double count = 0, total = 0;
    for (const auto& d : docs) {
        for (const auto& t : d.tokens) {
            vocab.insert(t);
            if (d.label == label) {
                total += 1;
                if (t == word) count += 1;
            }
        }
    }
    return (count + alpha) / (total + alpha * static_cast<double>(vocab.size()));
}

std::vector<LabeledDoc> random_corpus(Rng& rng, int n_labels) {
    static const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"};
    std::vector<LabeledDoc> docs;
    for (int l = 0; l < n_labels; ++l) {
        const auto n_docs = 1 + rng.uniform_index(4);
        for (std::uint64_t d = 0; d < n_docs; ++d) {
            LabeledDoc doc;
            doc.label = "L" + std::to_string(l);
            const auto len = 1 + rng.uniform_index(6);
            for (std::uint64_t t = 0; t < len; ++t) doc.tokens.push_back(words[rng.uniform_index(words.size())]);
            docs.push_back(doc);
        }
    }
    return docs;
}

} // namespace

TEST_CASE("tokenize") {
    CHECK(tokenize("Crash on login!") == TokenStream{"crash", "on", "login"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("A B").empty());
    CHECK(tokenize("HTTP-500 x error_code") == TokenStream{"http", "500", "error", "code"});
    for (const auto& t : tokenize("  ,,, aa --- bb ")) CHECK_FALSE(t.empty());
}

TEST_CASE("hand-computed Laplace estimates and posteriors") {
    const auto docs = hand_corpus();
    const NbModel model = train_nb(docs, 1.0);
    CHECK(model.vocabulary().size() == 6);
    CHECK(model.likelihood("error", "fault") == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(model.likelihood("crash", "fault") == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(model.likelihood("error", "enhancement") == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(model.prior("fault") == 0.5);

    const auto pred = classify_nb(model, {"error", "crash"});
    CHECK(pred.label == "fault");
    CHECK_FALSE(pred.no_evidence);
    const double expected = 0.03 / 0.035;
    CHECK(std::abs(pred.posteriors[model.class_index("fault")] - expected) <= 1e-9);
    CHECK(std::abs(pred.posteriors[model.class_index("enhancement")] - 0.005 / 0.035) <= 1e-9);
}

TEST_CASE("single repeated word instantiates the formula") {
    const std::vector<LabeledDoc> docs = {{{"x", "x", "x"}, "a"}, {{"y"}, "b"}};
    const NbModel model = train_nb(docs, 1.0);
    const double n = 3, v = 2;
    CHECK(model.likelihood("x", "a") == doctest::Approx((n + 1) / (n + v)).epsilon(1e-12));
}

TEST_CASE("training preconditions") {
    const auto docs = hand_corpus();
    CHECK_THROWS_AS(train_nb(docs, 0.0), Error);
    CHECK_THROWS_AS(train_nb(docs, -1.0), Error);
    const std::vector<LabeledDoc> one_label = {{{"aa"}, "x"}, {{"bb"}, "x"}};
    CHECK_THROWS_AS(train_nb(one_label), Error);
    const std::vector<LabeledDoc> empty_vocab = {{{}, "x"}, {{}, "y"}};
    CHECK_THROWS_AS(train_nb(empty_vocab), Error);
    const std::vector<std::string> labels = {"enhancement", "fault", "question"};
    CHECK_THROWS_AS(train_nb(docs, 1.0, labels), Error);
    CHECK_THROWS_AS(classify_nb(NbModel{}, {"error"}), Error);
}

TEST_CASE("out-of-vocabulary documents fall back to the priors") {
    std::vector<LabeledDoc> docs = hand_corpus();
    docs.push_back({tokenize("crash again"), "fault"});
    const NbModel model = train_nb(docs);
    const auto pred = classify_nb(model, {"unknown", "words"});
    CHECK(pred.no_evidence);
    CHECK(pred.label == "fault");
    CHECK(pred.posteriors[model.class_index("fault")] == doctest::Approx(3.0 / 5.0).epsilon(1e-12));
    CHECK(classify_nb(model, {}).no_evidence);
}

TEST_CASE("ties go to the lexicographically first label") {
    const std::vector<LabeledDoc> docs = {{{"same"}, "zulu"}, {{"same"}, "alpha"}};
    const NbModel model = train_nb(docs);
    const auto pred = classify_nb(model, {"same"});
    CHECK(pred.label == "alpha");
    CHECK(pred.posteriors[0] == doctest::Approx(0.5));
}

TEST_CASE("properties over random corpora") {
    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const int n_labels = 2 + static_cast<int>(rng.uniform_index(3));
        const auto docs = random_corpus(rng, n_labels);
        const double alpha = 0.25 + 2.0 * rng.uniform01();
        const NbModel model = train_nb(docs, alpha);

        // likelihoods match the counting oracle, rows and priors sum to one
        double prior_sum = 0;
        for (std::size_t c = 0; c < model.classes().size(); ++c) {
            prior_sum += model.priors()[c];
            double row = 0;
            for (const auto& w : model.vocabulary()) {
                const double p = model.likelihood(w, model.classes()[c]);
                CHECK(p == doctest::Approx(oracle_likelihood(docs, w, model.classes()[c], alpha)).epsilon(1e-12));
                row += std::exp(model.log_likelihoods()[c][static_cast<std::size_t>(model.word_index(w))]);
            }
            CHECK(std::abs(row - 1.0) <= 1e-9);
        }
        CHECK(std::abs(prior_sum - 1.0) <= 1e-9);

        // posteriors form a probability vector; classification is deterministic
        const auto& query = docs[rng.uniform_index(docs.size())].tokens;
        const auto p1 = classify_nb(model, query);
        const auto p2 = classify_nb(model, query);
        CHECK(p1.label == p2.label);
        CHECK(p1.posteriors == p2.posteriors);
        double sum = 0;
        for (double p : p1.posteriors) {
            CHECK(p >= 0.0);
            sum += p;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);

        // duplicating every document keeps the priors; with the smoothing mass
        // doubled alongside the counts the likelihoods are unchanged as well
        std::vector<LabeledDoc> doubled = docs;
        doubled.insert(doubled.end(), docs.begin(), docs.end());
        const NbModel twice = train_nb(doubled, 2.0 * alpha);
        for (std::size_t c = 0; c < model.classes().size(); ++c) {
            CHECK(twice.priors()[c] == doctest::Approx(model.priors()[c]).epsilon(1e-12));
            for (std::size_t w = 0; w < model.vocabulary().size(); ++w) {
                CHECK(twice.likelihoods()[c][w] == doctest::Approx(model.likelihoods()[c][w]).epsilon(1e-12));
            }
        }
        const NbModel twice_same_alpha = train_nb(doubled, alpha);
        for (std::size_t c = 0; c < model.classes().size(); ++c) {
            CHECK(twice_same_alpha.priors()[c] == doctest::Approx(model.priors()[c]).epsilon(1e-12));
        }

        // renaming labels permutes the outputs consistently
        std::map<std::string, std::string> rename;
        for (int l = 0; l < n_labels; ++l) rename["L" + std::to_string(l)] = "R" + std::to_string(n_labels - 1 - l);
        std::vector<LabeledDoc> renamed = docs;
        for (auto& d : renamed) d.label = rename[d.label];
        const NbModel rmodel = train_nb(renamed, alpha);
        const auto rp = classify_nb(rmodel, query);
        for (std::size_t c = 0; c < model.classes().size(); ++c) {
            const auto& mapped = rename[model.classes()[c]];
            CHECK(rp.posteriors[rmodel.class_index(mapped)] == doctest::Approx(p1.posteriors[c]).epsilon(1e-12));
        }
        const double top = *std::max_element(p1.posteriors.begin(), p1.posteriors.end());
        if (std::count_if(p1.posteriors.begin(), p1.posteriors.end(), [&](double p) { return p > top * (1 - 1e-9); }) == 1) {
            CHECK(rp.label == rename[p1.label]);
        }

        // JSON round trip is exact
        const NbModel back = nb_model_from_json(json::parse(to_json(model).dump()));
        CHECK(back == model);
        const auto pb = classify_nb(back, query);
        CHECK(pb.posteriors == p1.posteriors);
    }
}

TEST_CASE("stored models are validated") {
    const json good = to_json(train_nb(hand_corpus()));
    CHECK_NOTHROW(nb_model_from_json(good));
    json bad = good;
    bad["priors"] = {0.7, 0.7};
    CHECK_THROWS_AS(nb_model_from_json(bad), Error);
    bad = good;
    bad["likelihoods"][0][0] = bad["likelihoods"][0][0].get<double>() + 0.01;
    CHECK_THROWS_AS(nb_model_from_json(bad), Error);
    bad = good;
    bad["classes"] = {"fault", "enhancement"};
    CHECK_THROWS_AS(nb_model_from_json(bad), Error);
    bad = good;
    bad.erase("vocabulary");
    CHECK_THROWS_AS(nb_model_from_json(bad), Error);
}
