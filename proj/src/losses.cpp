// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpnet/losses.hpp"

#include "cpnet/errors.hpp"
#include "cpnet/ops.hpp"

namespace cpnet {

template <typename T>
Var<T> lsgan_discriminator_loss(Tape<T>& tape, Var<T> real_scores, Var<T> fake_scores) {
    (void)tape;
    Var<T> real_term = mean_all(square(add_scalar(real_scores, T(-1))));
    Var<T> fake_term = mean_all(square(fake_scores));
    return add(real_term, fake_term);
}

template <typename T>
Var<T> lsgan_generator_loss(Tape<T>& tape, Var<T> fake_scores) {
    (void)tape;
    return mean_all(square(add_scalar(fake_scores, T(-1))));
}

template <typename T>
Var<T> perceptual_loss(const PerceptualExtractor<T>& extractor, Tape<T>& tape,
                       Var<T> generated, Var<T> target) {
    if (!tape.value_of(generated).same_shape(tape.value_of(target)))
        throw ShapeError("perceptual_loss: generated and target shapes differ");
    std::vector<Var<T>> fs = extractor.extract(tape, generated);
    std::vector<Var<T>> ft = extractor.extract(tape, target);
    if (fs.size() != ft.size() || fs.empty())
        throw ShapeError("perceptual_loss: extractor returned mismatched feature lists");
    Var<T> acc;
    for (std::size_t l = 0; l < fs.size(); ++l) {
        Var<T> term = per_sample_l1_sum_mean(sub(fs[l], ft[l]));
        acc = acc.defined() ? add(acc, term) : term;
    }
    return scale(acc, T(1.0 / static_cast<double>(fs.size())));
}

template <typename T>
Var<T> probability_consistency_loss(const MapPredictor<T>& predictor, Tape<T>& tape,
                                    Var<T> generated, Var<T> target) {
    Var<T> map_gen = predictor.forward(tape, generated, /*frozen=*/true);
    Var<T> map_ref = predictor.forward(tape, detach(target), /*frozen=*/true);
    return per_sample_euclidean_norm_mean(sub(map_gen, detach(map_ref)));
}

template <typename T>
Var<T> probability_consistency_loss(const MapPredictor<T>& predictor, Tape<T>& tape,
                                    Var<T> generated, const Tensor<T>& target_maps) {
    Var<T> map_gen = predictor.forward(tape, generated, /*frozen=*/true);
    if (!tape.value_of(map_gen).same_shape(target_maps))
        throw ShapeError("probability_consistency_loss: target map shape " +
                         shape_str(target_maps.shape()) + " does not match predictor output " +
                         shape_str(tape.value_of(map_gen).shape()));
    Var<T> ref = tape.leaf(target_maps, false);
    return per_sample_euclidean_norm_mean(sub(map_gen, ref));
}

template <typename T>
Var<T> total_generator_loss(Tape<T>& tape, const LossWeights& weights, Var<T> adversarial,
                            Var<T> reconstruction, Var<T> temporal, Var<T> probability) {
    Var<T> total;
    auto accumulate = [&](Var<T> term, double w) {
        if (!term.defined() || w == 0.0) return;
        Var<T> scaled = scale(term, static_cast<T>(w));
        total = total.defined() ? add(total, scaled) : scaled;
    };
    accumulate(adversarial, weights.adversarial);
    accumulate(reconstruction, weights.reconstruction);
    accumulate(temporal, weights.temporal);
    accumulate(probability, weights.probability);
    if (!total.defined()) total = tape.leaf(Tensor<T>::scalar(T(0)), false);
    return total;
}

double total_generator_loss(const LossWeights& weights, double adversarial,
                            double reconstruction, double temporal, double probability) {
    return weights.adversarial * adversarial + weights.reconstruction * reconstruction +
           weights.temporal * temporal + weights.probability * probability;
}

#define CPNET_INSTANTIATE_LOSSES(T)                                                         \
    template Var<T> lsgan_discriminator_loss<T>(Tape<T>&, Var<T>, Var<T>);                  \
    template Var<T> lsgan_generator_loss<T>(Tape<T>&, Var<T>);                              \
    template Var<T> perceptual_loss<T>(const PerceptualExtractor<T>&, Tape<T>&, Var<T>,     \
                                       Var<T>);                                             \
    template Var<T> probability_consistency_loss<T>(const MapPredictor<T>&, Tape<T>&,       \
                                                    Var<T>, Var<T>);                        \
    template Var<T> probability_consistency_loss<T>(const MapPredictor<T>&, Tape<T>&,       \
                                                    Var<T>, const Tensor<T>&);              \
    template Var<T> total_generator_loss<T>(Tape<T>&, const LossWeights&, Var<T>, Var<T>,   \
                                            Var<T>, Var<T>);

CPNET_INSTANTIATE_LOSSES(float)
CPNET_INSTANTIATE_LOSSES(double)

#undef CPNET_INSTANTIATE_LOSSES

} // namespace cpnet
