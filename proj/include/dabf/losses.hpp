#pragma once

#include <string>

#include "dabf/autodiff.hpp"
#include "dabf/errors.hpp"
#include "dabf/nn.hpp"

namespace dabf::losses {

enum class RegNorm { l1, l2, huber };

inline std::string to_string(RegNorm n) {
    switch (n) {
        case RegNorm::l1: return "l1";
        case RegNorm::l2: return "l2";
        case RegNorm::huber: return "huber";
    }
    return "l1";
}

inline RegNorm reg_norm_from_string(const std::string& s) {
    if (s == "l1") return RegNorm::l1;
    if (s == "l2") return RegNorm::l2;
    if (s == "huber") return RegNorm::huber;
    throw ConfigError("unknown regression norm: " + s);
}

struct LossWeights {
    double lambda_s = 2.0;  // adversarial, S->T direction
    double lambda_t = 1.0;  // adversarial, T->S direction
    double lambda_c = 10.0; // cycle consistency
    double lambda_fs = 1.0; // source regression
    double lambda_ft = 1.0; // target regression (both terms)
    double r1_gamma = 10.0; // discriminator gradient penalty

    void validate() const {
        if (lambda_s < 0 || lambda_t < 0 || lambda_c < 0 || lambda_fs < 0 || lambda_ft < 0 ||
            r1_gamma < 0)
            throw ConfigError("loss weights must be nonnegative");
    }
};

// Mean over the batch of the per-sample norm of each column.
template <class T>
ad::Var<T> reduce_norm(const ad::Var<T>& err, RegNorm norm, T huber_delta = T(1)) {
    const T inv_b = T(1) / static_cast<T>(err.cols());
    switch (norm) {
        case RegNorm::l1: return ad::scale(ad::sum_all(ad::abs_val(err)), inv_b);
        case RegNorm::l2: return ad::scale(ad::sum_all(ad::mul(err, err)), inv_b);
        case RegNorm::huber:
            return ad::scale(ad::sum_all(ad::huber_elem(err, huber_delta)), inv_b);
    }
    throw ConfigError("unknown regression norm");
}

template <class T>
ad::Var<T> mean_log_clamped(const ad::Var<T>& probs, T eps) {
    const T inv_b = T(1) / static_cast<T>(probs.cols());
    return ad::scale(ad::sum_all(ad::log_op(ad::clamp(probs, eps, T(1) - eps))), inv_b);
}

inline constexpr double kProbEps = 1e-7;

// Non-saturating adversarial losses for one direction of the cycle.
// Discriminator: -E[log D(real)] - E[log(1 - D(G(src)))], fake detached.
template <class T>
ad::Var<T> loss_adv_disc(const nn::Discriminator<T>& disc, const nn::Generator<T>& gen,
                         const ad::Var<T>& real_batch, const ad::Var<T>& src_batch,
                         T eps = T(kProbEps)) {
    const ad::Var<T> fake = ad::detach(gen.forward(src_batch));
    const ad::Var<T> d_real = disc.forward(real_batch);
    const ad::Var<T> d_fake = disc.forward(fake);
    const ad::Var<T> one_minus_fake = ad::add_scalar(ad::neg(d_fake), T(1));
    return ad::add(ad::neg(mean_log_clamped(d_real, eps)),
                   ad::neg(mean_log_clamped(one_minus_fake, eps)));
}

// Generator: -E[log D(G(src))].
template <class T>
ad::Var<T> loss_adv_gen(const nn::Discriminator<T>& disc, const nn::Generator<T>& gen,
                        const ad::Var<T>& src_batch, T eps = T(kProbEps)) {
    return ad::neg(mean_log_clamped(disc.forward(gen.forward(src_batch)), eps));
}

// Cycle consistency (always L1): E[|G_ts(G_st(xs)) - xs|_1] + E[|G_st(G_ts(xt)) - xt|_1].
template <class T>
ad::Var<T> loss_cyc(const nn::Generator<T>& g_st, const nn::Generator<T>& g_ts,
                    const ad::Var<T>& xs, const ad::Var<T>& xt) {
    const ad::Var<T> s_term =
        reduce_norm(ad::sub(g_ts.forward(g_st.forward(xs)), xs), RegNorm::l1);
    const ad::Var<T> t_term =
        reduce_norm(ad::sub(g_st.forward(g_ts.forward(xt)), xt), RegNorm::l1);
    return ad::add(s_term, t_term);
}

// Source regression: E[|F_s(xs) - ys|_l].
template <class T>
ad::Var<T> loss_fs(const nn::Regressor<T>& f, const ad::Var<T>& xs, const ad::Var<T>& ys,
                   RegNorm norm, T huber_delta = T(1)) {
    return reduce_norm(ad::sub(f.forward(xs, Domain::source), ys), norm, huber_delta);
}

// Generated-pair regression: E[|F_t(G_st(xs)) - G_st(ys)|_l]. Both generator
// applications construct training data for F_t and are detached so regressor
// gradients cannot deform the domain maps.
template <class T>
ad::Var<T> loss_ft1(const nn::Regressor<T>& f, const nn::Generator<T>& g_st, const ad::Var<T>& xs,
                    const ad::Var<T>& ys, RegNorm norm, T huber_delta = T(1)) {
    const ad::Var<T> xt_gen = ad::detach(g_st.forward(xs));
    const ad::Var<T> yt_gen = ad::detach(g_st.forward(ys));
    return reduce_norm(ad::sub(f.forward(xt_gen, Domain::target), yt_gen), norm, huber_delta);
}

// Pseudo-label regression on real target data:
// E[|F_t(xt) - G_st(F_s(G_ts(xt)))|_l], pseudo-label branch detached.
template <class T>
ad::Var<T> loss_ft2(const nn::Regressor<T>& f, const nn::Generator<T>& g_st,
                    const nn::Generator<T>& g_ts, const ad::Var<T>& xt, RegNorm norm,
                    T huber_delta = T(1)) {
    const ad::Var<T> pseudo =
        ad::detach(g_st.forward(f.forward(g_ts.forward(xt), Domain::source)));
    return reduce_norm(ad::sub(f.forward(xt, Domain::target), pseudo), norm, huber_delta);
}

// R1 regularization: (gamma / 2) * E[|grad_x D(x)|^2] over real samples.
// Built by differentiating the discriminator output w.r.t. its input; the
// result is itself a graph node, so discriminator parameter gradients of the
// penalty flow through a second backward pass.
template <class T>
ad::Var<T> r1_penalty(const nn::Discriminator<T>& disc, const ad::Mat<T>& real_batch, T gamma) {
    const ad::Var<T> x = ad::leaf<T>(real_batch);
    const ad::Var<T> out = disc.forward(x);
    // Summing is valid: each output column depends only on its input column.
    const ad::GradMap<T> to_input = ad::backward(ad::sum_all(out));
    const ad::Var<T> gx = to_input.at(x);
    const T factor = gamma / (T(2) * static_cast<T>(real_batch.cols()));
    return ad::scale(ad::sum_all(ad::mul(gx, gx)), factor);
}

template <class T>
struct LossTerms {
    T adv_gst = 0; // generator-side, S->T
    T adv_gts = 0; // generator-side, T->S
    T cyc = 0;
    T fs = 0;
    T ft1 = 0;
    T ft2 = 0;
};

// The scalar training objective: weighted sum of the GAN group and the
// regressor group. The FT term weights the sum of both target losses.
template <class T>
T weighted_total(const LossTerms<T>& t, const LossWeights& w) {
    return static_cast<T>(w.lambda_s) * t.adv_gst + static_cast<T>(w.lambda_t) * t.adv_gts +
           static_cast<T>(w.lambda_c) * t.cyc + static_cast<T>(w.lambda_fs) * t.fs +
           static_cast<T>(w.lambda_ft) * (t.ft1 + t.ft2);
}

template <class T>
struct GeneratorObjective {
    ad::Var<T> total; // undefined when every weight is zero
    LossTerms<T> terms;
};

// Builds the generator+regressor step objective. Zero-weight terms are
// skipped entirely (no graph, no RNG, no gradient), which keeps the reduced
// configuration bit-identical to the standalone source-only trainer.
template <class T>
GeneratorObjective<T> generator_objective(const nn::ModelSet<T>& m, const ad::Var<T>& xs,
                                          const ad::Var<T>& ys, const ad::Var<T>& xt,
                                          const LossWeights& w, RegNorm norm, T huber_delta) {
    GeneratorObjective<T> obj;
    auto accumulate = [&obj](const ad::Var<T>& term, double weight, T& slot) {
        slot = term.scalar();
        const ad::Var<T> weighted = ad::scale(term, static_cast<T>(weight));
        obj.total = obj.total.defined() ? ad::add(obj.total, weighted) : weighted;
    };
    if (w.lambda_s > 0) accumulate(loss_adv_gen(m.d_t, m.g_st, xs), w.lambda_s, obj.terms.adv_gst);
    if (w.lambda_t > 0) accumulate(loss_adv_gen(m.d_s, m.g_ts, xt), w.lambda_t, obj.terms.adv_gts);
    if (w.lambda_c > 0) accumulate(loss_cyc(m.g_st, m.g_ts, xs, xt), w.lambda_c, obj.terms.cyc);
    if (w.lambda_fs > 0)
        accumulate(loss_fs(m.f, xs, ys, norm, huber_delta), w.lambda_fs, obj.terms.fs);
    if (w.lambda_ft > 0) {
        accumulate(loss_ft1(m.f, m.g_st, xs, ys, norm, huber_delta), w.lambda_ft, obj.terms.ft1);
        accumulate(loss_ft2(m.f, m.g_st, m.g_ts, xt, norm, huber_delta), w.lambda_ft,
                   obj.terms.ft2);
    }
    return obj;
}

template <class T>
struct DiscriminatorObjective {
    ad::Var<T> total; // undefined when both adversarial weights are zero
    T disc_t = 0, disc_s = 0, r1_t = 0, r1_s = 0;
};

template <class T>
DiscriminatorObjective<T> discriminator_objective(const nn::ModelSet<T>& m, const ad::Var<T>& xs,
                                                  const ad::Var<T>& xt, const LossWeights& w) {
    DiscriminatorObjective<T> obj;
    auto accumulate = [&obj](const ad::Var<T>& term, double weight, T& slot) {
        slot = term.scalar();
        const ad::Var<T> weighted = ad::scale(term, static_cast<T>(weight));
        obj.total = obj.total.defined() ? ad::add(obj.total, weighted) : weighted;
    };
    if (w.lambda_s > 0) {
        accumulate(loss_adv_disc(m.d_t, m.g_st, xt, xs), w.lambda_s, obj.disc_t);
        if (w.r1_gamma > 0)
            accumulate(r1_penalty(m.d_t, xt.value(), static_cast<T>(w.r1_gamma)), 1.0, obj.r1_t);
    }
    if (w.lambda_t > 0) {
        accumulate(loss_adv_disc(m.d_s, m.g_ts, xs, xt), w.lambda_t, obj.disc_s);
        if (w.r1_gamma > 0)
            accumulate(r1_penalty(m.d_s, xs.value(), static_cast<T>(w.r1_gamma)), 1.0, obj.r1_s);
    }
    return obj;
}

} // namespace dabf::losses
