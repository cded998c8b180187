// Explains the first few held-out rows of the loans sample with every NICE variant.
//   quickstart samples/loans/schema.json samples/loans/data.csv

#include <iostream>

#include "nice/nice.hpp"

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: quickstart SCHEMA CSV\n";
        return 1;
    }
    auto data = nicecf::load_dataset(argv[1], argv[2]);
    auto [train, test] = nicecf::split(data, 0.2, /*seed=*/1);
    auto stats = nicecf::fit_stats(train);
    auto model = nicecf::train_logistic(train, stats);
    auto ae = std::make_shared<nicecf::AutoencoderScorer>(nicecf::train_autoencoder(train, stats), stats);

    nicecf::SearchContext ctx(train, stats, model, {}, ae);
    for (std::size_t i = 0; i < 3; ++i) {
        for (auto kind : {nicecf::RewardKind::None, nicecf::RewardKind::Sparsity, nicecf::RewardKind::Proximity,
                          nicecf::RewardKind::Plausibility}) {
            const auto e = nicecf::explain_nice(test.rows[i], kind, ctx);
            std::cout << "row " << i << " " << e.explainer_id << ": " << e.changed_features.size() << " changes, valid "
                      << e.valid << '\n';
        }
    }
}
