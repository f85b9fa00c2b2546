#include "imrl/agent.hpp"

#include <cmath>
#include <cstring>

#include "imrl/errors.hpp"

namespace imrl::agent {

namespace {

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
    std::vector<double> out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

std::vector<double> draw_noise(int dim, RngStream& rng) {
    std::vector<double> noise(dim);
    for (double& z : noise) z = rng.normal();
    return noise;
}

void require_finite(double value, const char* what) {
    if (!std::isfinite(value)) {
        throw TrainingAbort(std::string(what) + " went non-finite");
    }
}

} // namespace

void HyperParams::validate() const {
    if (gamma < 0.0 || gamma > 1.0) throw InvalidInput("HyperParams: gamma outside [0,1]");
    if (lr <= 0.0) throw InvalidInput("HyperParams: lr must be positive");
    if (beta < 0.0) throw InvalidInput("HyperParams: beta must be >= 0");
    if (alpha_r < 0.0) throw InvalidInput("HyperParams: alpha_r must be >= 0");
    if (alpha_init <= 0.0) throw InvalidInput("HyperParams: alpha_init must be positive");
    if (batch_size < 1) throw InvalidInput("HyperParams: batch_size must be >= 1");
    if (buffer_capacity < static_cast<std::size_t>(batch_size)) {
        throw InvalidInput("HyperParams: buffer capacity below batch size");
    }
    if (polyak < 0.0 || polyak > 1.0) throw InvalidInput("HyperParams: polyak outside [0,1]");
    for (int h : hidden) {
        if (h < 1) throw InvalidInput("HyperParams: hidden sizes must be positive");
    }
}

double AgentState::alpha() const { return std::exp(log_alpha); }

double AgentState::target_entropy() const {
    return hp.target_entropy != 0.0 ? hp.target_entropy : -static_cast<double>(action_dim);
}

nn::SquashedGaussianHead AgentState::policy_head(std::span<const double> flat_state) const {
    return nn::head_from_raw(nn::forward(nets.pi, flat_state));
}

nn::SquashedGaussianHead AgentState::inverse_head(std::span<const double> flat_state,
                                                  std::span<const double> flat_next) const {
    return nn::head_from_raw(nn::forward(nets.inv, concat(flat_state, flat_next)));
}

AgentState make_agent(int state_dim, int action_dim, const HyperParams& hp, RngStream& init_rng) {
    hp.validate();
    AgentState a;
    a.hp = hp;
    a.state_dim = state_dim;
    a.action_dim = action_dim;

    auto sizes = [&](int in, int out) {
        std::vector<int> s;
        s.push_back(in);
        s.insert(s.end(), hp.hidden.begin(), hp.hidden.end());
        s.push_back(out);
        return s;
    };
    a.nets.q = nn::make_net(sizes(state_dim + action_dim, 1), hp.activation);
    nn::init_uniform(a.nets.q, init_rng);
    if (hp.twin_q) {
        a.nets.q2 = nn::make_net(sizes(state_dim + action_dim, 1), hp.activation);
        nn::init_uniform(a.nets.q2, init_rng);
    }
    a.nets.v = nn::make_net(sizes(state_dim, 1), hp.activation);
    nn::init_uniform(a.nets.v, init_rng);
    a.nets.pi = nn::make_net(sizes(state_dim, 2 * action_dim), hp.activation);
    nn::init_uniform(a.nets.pi, init_rng);
    a.nets.inv = nn::make_net(sizes(2 * state_dim, 2 * action_dim), hp.activation);
    nn::init_uniform(a.nets.inv, init_rng);
    a.nets.v_target = a.nets.v;

    a.opt_q = nn::make_adam(a.nets.q, hp.lr);
    if (hp.twin_q) a.opt_q2 = nn::make_adam(a.nets.q2, hp.lr);
    a.opt_v = nn::make_adam(a.nets.v, hp.lr);
    a.opt_pi = nn::make_adam(a.nets.pi, hp.lr);
    a.opt_inv = nn::make_adam(a.nets.inv, hp.lr);
    a.log_alpha = std::log(hp.alpha_init);
    a.opt_alpha.lr = hp.lr;
    return a;
}

// ---------------------------------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw InvalidInput("ReplayBuffer: capacity must be positive");
    ring_.reserve(std::min<std::size_t>(capacity, 4096));
}

void ReplayBuffer::push(Transition t) {
    Entry e{std::move(t), {}, {}};
    e.flat_s = e.tr.s.flatten();
    e.flat_next = e.tr.next.flatten();
    if (count_ < capacity_) {
        ring_.push_back(std::move(e));
        count_ += 1;
    } else {
        ring_[head_] = std::move(e);
        head_ = (head_ + 1) % capacity_;
    }
    total_pushed_ += 1;
}

Batch sample_batch(const ReplayBuffer& buffer, int n, RngStream& rng) {
    if (buffer.size() == 0) throw InvalidInput("sample_batch: empty buffer");
    Batch batch;
    batch.reserve(n);
    for (int k = 0; k < n; ++k) {
        const std::size_t i = rng.below(buffer.size());
        const Transition& tr = buffer[i];
        batch.push_back(Sample{&buffer.flat_s(i), &tr.a, tr.r, &buffer.flat_next(i), tr.done});
    }
    return batch;
}

// ---------------------------------------------------------------------------

CriticLoss loss_q(const AgentState& agent, const Batch& batch) {
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    CriticLoss out;
    out.grads = nn::make_grads(agent.nets.q);
    if (agent.hp.twin_q) out.grads2 = nn::make_grads(agent.nets.q2);
    double j1 = 0.0, j2 = 0.0;
    nn::ForwardTrace trace;
    for (const Sample& item : batch) {
        const std::vector<double> x = concat(*item.s, *item.a);
        const double v_next = nn::forward(agent.nets.v_target, *item.next)[0];
        const double target = agent.hp.alpha_r * item.r + agent.hp.gamma * v_next;

        const double q1 = nn::forward_traced(agent.nets.q, x, trace)[0];
        const double e1 = q1 - target;
        j1 += e1 * e1 * inv_b;
        const double up1[1] = {2.0 * e1 * inv_b};
        nn::backward(agent.nets.q, trace, up1, out.grads);

        if (agent.hp.twin_q) {
            const double q2 = nn::forward_traced(agent.nets.q2, x, trace)[0];
            const double e2 = q2 - target;
            j2 += e2 * e2 * inv_b;
            const double up2[1] = {2.0 * e2 * inv_b};
            nn::backward(agent.nets.q2, trace, up2, out.grads2);
        }
    }
    out.loss = agent.hp.twin_q ? 0.5 * (j1 + j2) : j1;
    require_finite(out.loss, "loss_q");
    return out;
}

namespace {

// Q(s, a) with the argmin critic's action gradient when the twin is enabled.
double critic_value(const AgentState& agent, std::span<const double> x, std::vector<double>* dq_da) {
    nn::ForwardTrace trace;
    const double q1 = nn::forward_traced(agent.nets.q, x, trace)[0];
    const int ds = agent.state_dim;
    const int da = agent.action_dim;
    auto action_grad = [&](const nn::DenseNet& net, const nn::ForwardTrace& tr) {
        nn::NetGrads scratch = nn::make_grads(net);
        std::vector<double> xgrad;
        const double up[1] = {1.0};
        nn::backward(net, tr, up, scratch, &xgrad);
        return std::vector<double>(xgrad.begin() + ds, xgrad.begin() + ds + da);
    };
    if (!agent.hp.twin_q) {
        if (dq_da != nullptr) *dq_da = action_grad(agent.nets.q, trace);
        return q1;
    }
    nn::ForwardTrace trace2;
    const double q2 = nn::forward_traced(agent.nets.q2, x, trace2)[0];
    if (q2 < q1) {
        if (dq_da != nullptr) *dq_da = action_grad(agent.nets.q2, trace2);
        return q2;
    }
    if (dq_da != nullptr) *dq_da = action_grad(agent.nets.q, trace);
    return q1;
}

} // namespace

ValueLoss loss_v(const AgentState& agent, const Batch& batch, RngStream& rng) {
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    const double beta = agent.hp.beta;
    ValueLoss out;
    out.grads = nn::make_grads(agent.nets.v);
    nn::ForwardTrace trace;
    for (const Sample& item : batch) {
        const nn::SquashedGaussianHead head = agent.policy_head(*item.s);
        const std::vector<double> noise = draw_noise(agent.action_dim, rng);
        const nn::SquashedSample samp = nn::sample_squashed(head, noise);
        const double qv = critic_value(agent, concat(*item.s, samp.action), nullptr);

        double g = 0.0;
        if (beta != 0.0) {
            const nn::SquashedGaussianHead ih = agent.inverse_head(*item.s, *item.next);
            if (agent.hp.intrinsic == IntrinsicMode::Empowerment) {
                g = nn::squashed_log_prob(ih, samp.action) - samp.log_prob;
            } else {
                g = -nn::gaussian_kl(head, ih);
            }
        }
        const double target = qv + beta * g;

        const double value = nn::forward_traced(agent.nets.v, *item.s, trace)[0];
        const double e = value - target;
        out.loss += e * e * inv_b;
        out.mean_g += g * inv_b;
        const double up[1] = {2.0 * e * inv_b};
        nn::backward(agent.nets.v, trace, up, out.grads);
    }
    require_finite(out.loss, "loss_v");
    return out;
}

PolicyLoss loss_pi(const AgentState& agent, const Batch& batch, RngStream& rng) {
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    const double beta = agent.hp.beta;
    const double alpha_t = agent.hp.tune_temperature ? agent.alpha() : 0.0;
    const int da = agent.action_dim;
    PolicyLoss out;
    out.grads = nn::make_grads(agent.nets.pi);
    nn::ForwardTrace trace_pi;
    std::vector<double> upstream(2 * da);
    for (const Sample& item : batch) {
        const std::vector<double> raw = nn::forward_traced(agent.nets.pi, *item.s, trace_pi);
        const nn::SquashedGaussianHead head = nn::head_from_raw(raw);
        const std::vector<double> noise = draw_noise(da, rng);
        const nn::SquashedSample samp = nn::sample_squashed(head, noise);
        const nn::ReparamGrads rg = nn::reparam_grads(head, samp);

        std::vector<double> dq_da;
        const double qv = critic_value(agent, concat(*item.s, samp.action), &dq_da);

        double g = 0.0;
        std::vector<double> dinv_da(da, 0.0);
        nn::KlGrads kl_grads;
        if (beta != 0.0) {
            const nn::SquashedGaussianHead ih = agent.inverse_head(*item.s, *item.next);
            if (agent.hp.intrinsic == IntrinsicMode::Empowerment) {
                g = nn::squashed_log_prob(ih, samp.action) - samp.log_prob;
                dinv_da = nn::squashed_log_prob_grads(ih, samp.action).d_action;
            } else {
                g = -nn::gaussian_kl(head, ih);
                kl_grads = nn::gaussian_kl_grads(head, ih);
            }
        }

        const double objective = beta * g + qv - alpha_t * samp.log_prob;
        out.loss += -objective * inv_b;

        if (beta != 0.0 && agent.hp.intrinsic == IntrinsicMode::KlClosedForm) {
            for (int k = 0; k < da; ++k) {
                const double dmean = dq_da[k] * rg.da_dmean[k] - alpha_t * rg.dlp_dmean[k] -
                                     beta * kl_grads.d_mean[k];
                const double dstd = dq_da[k] * rg.da_dlogstd[k] - alpha_t * rg.dlp_dlogstd[k] -
                                    beta * kl_grads.d_log_std[k];
                upstream[k] = -dmean * inv_b;
                upstream[da + k] = -dstd * inv_b;
            }
        } else {
            // objective = beta * log p_xi(a~) - (beta + alpha_t) * log pi(a~) + Q(s, a~)
            for (int k = 0; k < da; ++k) {
                const double through_action = beta * dinv_da[k] + dq_da[k];
                const double dmean =
                    through_action * rg.da_dmean[k] - (beta + alpha_t) * rg.dlp_dmean[k];
                const double dstd =
                    through_action * rg.da_dlogstd[k] - (beta + alpha_t) * rg.dlp_dlogstd[k];
                upstream[k] = -dmean * inv_b;
                upstream[da + k] = -dstd * inv_b;
            }
        }
        nn::backward(agent.nets.pi, trace_pi, upstream, out.grads);
    }
    require_finite(out.loss, "loss_pi");
    return out;
}

InverseLoss loss_inv(const AgentState& agent, const Batch& batch) {
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    const int da = agent.action_dim;
    InverseLoss out;
    out.grads = nn::make_grads(agent.nets.inv);
    nn::ForwardTrace trace;
    std::vector<double> upstream(2 * da);
    for (const Sample& item : batch) {
        const std::vector<double> x = concat(*item.s, *item.next);
        const std::vector<double> raw = nn::forward_traced(agent.nets.inv, x, trace);
        const nn::SquashedGaussianHead head = nn::head_from_raw(raw);
        out.loss += -nn::squashed_log_prob(head, *item.a) * inv_b;
        const nn::DensityGrads dg = nn::squashed_log_prob_grads(head, *item.a);
        for (int k = 0; k < da; ++k) {
            upstream[k] = -dg.d_mean[k] * inv_b;
            upstream[da + k] = -dg.d_log_std[k] * inv_b;
        }
        nn::backward(agent.nets.inv, trace, upstream, out.grads);
    }
    require_finite(out.loss, "loss_inv");
    return out;
}

AlphaLoss loss_alpha(const AgentState& agent, const Batch& batch, RngStream& rng) {
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    AlphaLoss out;
    for (const Sample& item : batch) {
        const nn::SquashedGaussianHead head = agent.policy_head(*item.s);
        const std::vector<double> noise = draw_noise(agent.action_dim, rng);
        out.mean_log_pi += nn::sample_squashed(head, noise).log_prob * inv_b;
    }
    const double gap = out.mean_log_pi + agent.target_entropy();
    out.loss = -agent.alpha() * gap;
    out.grad_log_alpha = -agent.alpha() * gap;
    require_finite(out.loss, "loss_alpha");
    return out;
}

std::vector<double> act(const AgentState& agent, std::span<const double> flat_state, ActMode mode,
                        RngStream& rng) {
    const nn::SquashedGaussianHead head = agent.policy_head(flat_state);
    if (mode == ActMode::Exploit) {
        std::vector<double> action(head.mean.size());
        for (std::size_t i = 0; i < action.size(); ++i) action[i] = std::tanh(head.mean[i]);
        return action;
    }
    const std::vector<double> noise = draw_noise(agent.action_dim, rng);
    return nn::sample_squashed(head, noise).action;
}

double intrinsic_g(const AgentState& agent, std::span<const double> flat_state,
                   std::span<const double> action, std::span<const double> flat_next) {
    const double lp_inv = nn::squashed_log_prob(agent.inverse_head(flat_state, flat_next), action);
    const double lp_pi = nn::squashed_log_prob(agent.policy_head(flat_state), action);
    return lp_inv - lp_pi;
}

double kl_intrinsic(const AgentState& agent, std::span<const double> flat_state,
                    std::span<const double> flat_next) {
    return -nn::gaussian_kl(agent.policy_head(flat_state),
                            agent.inverse_head(flat_state, flat_next));
}

void polyak_update(AgentState& agent) {
    const double tau = agent.hp.polyak;
    for (std::size_t l = 0; l < agent.nets.v.w.size(); ++l) {
        auto& wt = agent.nets.v_target.w[l];
        const auto& ws = agent.nets.v.w[l];
        for (std::size_t i = 0; i < wt.size(); ++i) wt[i] = tau * ws[i] + (1.0 - tau) * wt[i];
        auto& bt = agent.nets.v_target.b[l];
        const auto& bs = agent.nets.v.b[l];
        for (std::size_t i = 0; i < bt.size(); ++i) bt[i] = tau * bs[i] + (1.0 - tau) * bt[i];
    }
}

LossReport gradient_step(AgentState& agent, const Batch& batch, RngStream& rng) {
    LossReport report;

    CriticLoss ql = loss_q(agent, batch);
    nn::adam_update(agent.nets.q, ql.grads, agent.opt_q);
    if (agent.hp.twin_q) nn::adam_update(agent.nets.q2, ql.grads2, agent.opt_q2);
    report.j_q = ql.loss;

    ValueLoss vl = loss_v(agent, batch, rng);
    nn::adam_update(agent.nets.v, vl.grads, agent.opt_v);
    report.j_v = vl.loss;
    report.mean_g = vl.mean_g;

    PolicyLoss pl = loss_pi(agent, batch, rng);
    nn::adam_update(agent.nets.pi, pl.grads, agent.opt_pi);
    report.j_pi = pl.loss;

    InverseLoss il = loss_inv(agent, batch);
    nn::adam_update(agent.nets.inv, il.grads, agent.opt_inv);
    report.j_p = il.loss;

    AlphaLoss al = loss_alpha(agent, batch, rng);
    if (agent.hp.tune_temperature) {
        nn::adam_update(agent.log_alpha, al.grad_log_alpha, agent.opt_alpha);
    }
    report.j_alpha = al.loss;
    report.alpha = agent.alpha();

    polyak_update(agent);
    return report;
}

// ---------------------------------------------------------------------------

Trainer::Trainer(env::Environment& environment, AgentState agent, AugmentationSettings aug,
                 std::uint64_t seed)
    : env_(environment), agent_(std::move(agent)), buffer_(agent_.hp.buffer_capacity),
      aug_(std::move(aug)), rngs_(seed) {
    if (aug_.enabled && aug_.oracle_env == nullptr) {
        throw InvalidInput("Trainer: augmentation enabled without a schema environment");
    }
}

EpisodeReport Trainer::run_episode(long episode_index) {
    const double threshold = causal::adaptive_threshold(episode_index, aug_.config);

    EpisodeReport report;
    report.episode = episode_index;
    report.threshold = threshold;

    FactoredState current = env_.reset();
    std::vector<double> flat = current.flatten();
    long steps = 0;
    long grad_steps = 0;
    double clicks = 0.0;

    for (int t = 0; t < env_.episode_length(); ++t) {
        const std::vector<double> action = act(agent_, flat, ActMode::Explore, rngs_.policy);
        const env::StepOutcome out = env_.step(action);

        Transition tr{current, action, out.reward, out.next_state, out.done};
        buffer_.push(tr);
        if (aug_.enabled && out.reward >= threshold) {
            const std::size_t n = causal::augment_buffer(
                buffer_, tr, threshold, *aug_.oracle_env, aug_.detector, aug_.config,
                rngs_.augmentation, episode_index, aug_.audit ? &audit_log_ : nullptr);
            report.augmented += n;
            total_augmented_ += n;
        }

        if (buffer_.size() >= static_cast<std::size_t>(agent_.hp.batch_size)) {
            const Batch batch = sample_batch(buffer_, agent_.hp.batch_size, rngs_.buffer);
            const LossReport lr = gradient_step(agent_, batch, rngs_.policy);
            report.losses.j_q += lr.j_q;
            report.losses.j_v += lr.j_v;
            report.losses.j_pi += lr.j_pi;
            report.losses.j_p += lr.j_p;
            report.losses.j_alpha += lr.j_alpha;
            report.losses.mean_g += lr.mean_g;
            report.losses.alpha = lr.alpha;
            grad_steps += 1;
        }

        report.episode_return += out.reward;
        clicks += out.reward > 0.0 ? 1.0 : 0.0;
        current = out.next_state;
        flat = current.flatten();
        steps += 1;
        env_steps_ += 1;
        if (out.done) break;
    }

    if (grad_steps > 0) {
        const double inv = 1.0 / static_cast<double>(grad_steps);
        report.losses.j_q *= inv;
        report.losses.j_v *= inv;
        report.losses.j_pi *= inv;
        report.losses.j_p *= inv;
        report.losses.j_alpha *= inv;
        report.losses.mean_g *= inv;
    } else {
        report.losses.alpha = agent_.alpha();
    }
    report.ctr = steps > 0 ? clicks / static_cast<double>(steps) : 0.0;
    report.env_steps = env_steps_;
    return report;
}

EvalReport Trainer::evaluate(env::Environment& eval_env, int episodes) const {
    EvalReport report;
    long steps = 0;
    double clicks = 0.0;
    std::uint64_t digest = 14695981039346656037ull;
    auto mix = [&digest](double x) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, &x, sizeof(bits));
        digest ^= bits;
        digest *= 1099511628211ull;
    };
    RngStream unused(0, "eval-policy"); // exploit mode draws nothing
    for (int e = 0; e < episodes; ++e) {
        FactoredState s = eval_env.reset();
        if (const auto* rec = dynamic_cast<const env::RecEnv*>(&eval_env)) {
            for (double x : rec->user().static_interest) mix(x);
            for (double x : rec->user().demographic) mix(x);
        }
        double ep_return = 0.0;
        for (int t = 0; t < eval_env.episode_length(); ++t) {
            const std::vector<double> action = act(agent_, s.flatten(), ActMode::Exploit, unused);
            const env::StepOutcome out = eval_env.step(action);
            ep_return += out.reward;
            clicks += out.reward > 0.0 ? 1.0 : 0.0;
            steps += 1;
            s = out.next_state;
            if (out.done) break;
        }
        report.mean_return += ep_return / static_cast<double>(episodes);
    }
    report.ctr = steps > 0 ? clicks / static_cast<double>(steps) : 0.0;
    report.user_digest = digest;
    return report;
}

} // namespace imrl::agent
