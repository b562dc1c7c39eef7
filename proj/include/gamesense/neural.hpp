#pragma once

// Minimal neural toolkit: dense / conv / single-gate recurrent layers, a
// triple-branch Q-network (vision + state + action history feeding a fusion
// head), SGD/Adam, finite-difference gradient checking, and binary
// checkpoints. Everything runs on 64-bit floats so gradient checks are
// decisive; there is no autograd, each layer's backward pass is written out
// by hand and verified against central differences.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gamesense/common.hpp"

namespace gamesense {

struct Tensor {
    std::vector<int> shape;
    std::vector<double> v;

    static Tensor zeros(std::vector<int> s) {
        Tensor t;
        t.shape = std::move(s);
        t.v.assign(size_t(std::max<int64_t>(0, numel_of(t.shape))), 0.0);
        return t;
    }

    static int64_t numel_of(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) n *= d;
        return n;
    }

    int64_t numel() const { return int64_t(v.size()); }

    bool finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }
};

inline std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
    return out + "]";
}

struct ConvLayerSpec {
    int out_channels = 0;
    int kernel = 0;
    int stride = 1;
};

// Triple-branch Q-network layout. The vision branch runs a small conv stack
// over a downsampled grayscale frame and flattens into one dense layer; the
// state branch is a dense stack over the scalar state vector; the history
// branch feeds the last `history_window` actions (one-hot) through a
// single-gate recurrent cell. The three outputs are concatenated and passed
// through the fusion stack, whose last layer is the Q-value head.
struct QNetworkSpec {
    int vision_channels = 1;
    int vision_height = 0;
    int vision_width = 0;
    std::vector<ConvLayerSpec> conv;
    int vision_dense = 64;

    int state_size = 0;
    std::vector<int> state_dense;

    int history_window = 8;
    int history_hidden = 16;

    std::vector<int> fusion_dense;
    int action_count = 0;

    std::vector<std::string> validate() const {
        std::vector<std::string> bad;
        if (vision_channels < 1) bad.push_back("vision_channels must be >= 1");
        if (vision_height < 1 || vision_width < 1)
            bad.push_back("vision input must have positive height and width");
        int h = vision_height, w = vision_width;
        for (size_t i = 0; i < conv.size(); ++i) {
            const ConvLayerSpec& c = conv[i];
            if (c.out_channels < 1 || c.kernel < 1 || c.stride < 1) {
                bad.push_back(strf("conv layer %zu needs positive channels/kernel/stride", i));
                continue;
            }
            if (c.kernel > h || c.kernel > w) {
                bad.push_back(strf("conv layer %zu kernel %d exceeds input %dx%d", i, c.kernel, h,
                                   w));
                continue;
            }
            h = (h - c.kernel) / c.stride + 1;
            w = (w - c.kernel) / c.stride + 1;
        }
        if (vision_dense < 1) bad.push_back("vision_dense must be >= 1");
        if (state_size < 1) bad.push_back("state_size must be >= 1");
        for (int d : state_dense)
            if (d < 1) bad.push_back("state_dense sizes must be >= 1");
        if (history_window < 1) bad.push_back("history_window must be >= 1");
        if (history_hidden < 1) bad.push_back("history_hidden must be >= 1");
        if (action_count < 1) bad.push_back("action_count must be >= 1");
        if (fusion_dense.empty())
            bad.push_back("fusion_dense must end in the action count");
        else if (fusion_dense.back() != action_count)
            bad.push_back(strf("fusion_dense ends in %d, expected action_count %d",
                               fusion_dense.back(), action_count));
        for (int d : fusion_dense)
            if (d < 1) bad.push_back("fusion_dense sizes must be >= 1");
        return bad;
    }

    // Spatial size after the conv stack (validate() must have passed).
    void conv_output(int& channels, int& height, int& width) const {
        channels = vision_channels;
        height = vision_height;
        width = vision_width;
        for (const ConvLayerSpec& c : conv) {
            channels = c.out_channels;
            height = (height - c.kernel) / c.stride + 1;
            width = (width - c.kernel) / c.stride + 1;
        }
    }

    int state_out_size() const { return state_dense.empty() ? state_size : state_dense.back(); }
    int fusion_in_size() const { return vision_dense + state_out_size() + history_hidden; }

    // Every parameter the network owns, in name order. Checkpoints and
    // initialization are validated against this list.
    std::vector<std::pair<std::string, std::vector<int>>> parameter_shapes() const {
        std::vector<std::pair<std::string, std::vector<int>>> out;
        int c = vision_channels, h = vision_height, w = vision_width;
        for (size_t i = 0; i < conv.size(); ++i) {
            out.push_back({strf("vision.conv%zu.weight", i),
                           {conv[i].out_channels, c, conv[i].kernel, conv[i].kernel}});
            out.push_back({strf("vision.conv%zu.bias", i), {conv[i].out_channels}});
            c = conv[i].out_channels;
            h = (h - conv[i].kernel) / conv[i].stride + 1;
            w = (w - conv[i].kernel) / conv[i].stride + 1;
        }
        out.push_back({"vision.dense.weight", {vision_dense, c * h * w}});
        out.push_back({"vision.dense.bias", {vision_dense}});
        int prev = state_size;
        for (size_t i = 0; i < state_dense.size(); ++i) {
            out.push_back({strf("state.dense%zu.weight", i), {state_dense[i], prev}});
            out.push_back({strf("state.dense%zu.bias", i), {state_dense[i]}});
            prev = state_dense[i];
        }
        int gate_in = history_hidden + action_count;
        out.push_back({"history.gate.weight", {history_hidden, gate_in}});
        out.push_back({"history.gate.bias", {history_hidden}});
        out.push_back({"history.cand.weight", {history_hidden, gate_in}});
        out.push_back({"history.cand.bias", {history_hidden}});
        prev = fusion_in_size();
        for (size_t i = 0; i < fusion_dense.size(); ++i) {
            out.push_back({strf("fusion.dense%zu.weight", i), {fusion_dense[i], prev}});
            out.push_back({strf("fusion.dense%zu.bias", i), {fusion_dense[i]}});
            prev = fusion_dense[i];
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    // Canonical text form; its hash is stored in checkpoints so a file can
    // only be loaded back into the network layout that wrote it.
    std::string canonical() const {
        std::string s = strf("vision=%dx%dx%d;conv=", vision_channels, vision_height,
                             vision_width);
        for (size_t i = 0; i < conv.size(); ++i)
            s += strf("%s%dk%ds%d", i ? "," : "", conv[i].out_channels, conv[i].kernel,
                      conv[i].stride);
        s += strf(";vdense=%d;state=%d;sdense=", vision_dense, state_size);
        for (size_t i = 0; i < state_dense.size(); ++i)
            s += strf("%s%d", i ? "," : "", state_dense[i]);
        s += strf(";hist=%dx%d;fusion=", history_window, history_hidden);
        for (size_t i = 0; i < fusion_dense.size(); ++i)
            s += strf("%s%d", i ? "," : "", fusion_dense[i]);
        s += strf(";actions=%d", action_count);
        return s;
    }

    uint64_t hash() const {
        std::string s = canonical();
        return fnv1a(s.data(), s.size());
    }
};

inline std::atomic<uint64_t> g_params_revision{0};

// Named parameter tensors plus optimizer state. `revision` tracks in-memory
// mutations so a backward pass can detect that its cached forward activations
// no longer match the weights.
struct Params {
    std::map<std::string, Tensor> tensors;
    std::map<std::string, Tensor> opt_state;
    uint64_t adam_step = 0;
    uint64_t spec_hash = 0;
    uint64_t revision = 0;

    void bump() { revision = ++g_params_revision; }

    bool finite() const {
        for (const auto& [name, t] : tensors)
            if (!t.finite()) return false;
        return true;
    }

    int64_t count() const {
        int64_t n = 0;
        for (const auto& [name, t] : tensors) n += t.numel();
        return n;
    }
};

inline Params init_params(const QNetworkSpec& spec, uint64_t seed) {
    auto bad = spec.validate();
    if (!bad.empty()) throw std::invalid_argument("bad network spec: " + bad.front());
    Params p;
    p.spec_hash = spec.hash();
    RngStream rng(seed, "neural/init");
    for (const auto& [name, shape] : spec.parameter_shapes()) {
        Tensor t = Tensor::zeros(shape);
        if (name.size() > 7 && name.substr(name.size() - 7) == ".weight") {
            // Glorot-style uniform: rows are output units, the rest is fan-in.
            int64_t fan_out = shape[0];
            int64_t fan_in = t.numel() / std::max<int64_t>(1, fan_out);
            double bound = std::sqrt(6.0 / double(fan_in + fan_out));
            for (double& x : t.v) x = (rng.next_double() * 2.0 - 1.0) * bound;
        }
        p.tensors.emplace(name, std::move(t));
    }
    p.bump();
    return p;
}

// Input sample for one forward pass. `history` holds the last H action
// indices oldest-first; -1 marks "no action yet" and encodes as all zeros.
struct QInput {
    Tensor vision;
    std::vector<double> state;
    std::vector<int> history;
};

namespace detail {

inline void dense_forward(const Tensor& w, const Tensor& b, const std::vector<double>& x,
                          std::vector<double>& out) {
    int rows = w.shape[0], cols = w.shape[1];
    out.assign(size_t(rows), 0.0);
    for (int r = 0; r < rows; ++r) {
        double acc = b.v[size_t(r)];
        const double* wr = &w.v[size_t(r) * cols];
        for (int c = 0; c < cols; ++c) acc += wr[c] * x[size_t(c)];
        out[size_t(r)] = acc;
    }
}

// Accumulates dW/db/dx for y = W x + b given the gradient at y.
inline void dense_backward(const Tensor& w, const std::vector<double>& x,
                           const std::vector<double>& dy, Tensor& dw, Tensor& db,
                           std::vector<double>* dx) {
    int rows = w.shape[0], cols = w.shape[1];
    if (dx) dx->assign(size_t(cols), 0.0);
    for (int r = 0; r < rows; ++r) {
        double g = dy[size_t(r)];
        db.v[size_t(r)] += g;
        double* dwr = &dw.v[size_t(r) * cols];
        const double* wr = &w.v[size_t(r) * cols];
        for (int c = 0; c < cols; ++c) {
            dwr[c] += g * x[size_t(c)];
            if (dx) (*dx)[size_t(c)] += g * wr[c];
        }
    }
}

inline void relu_inplace(std::vector<double>& v) {
    for (double& x : v) x = std::max(0.0, x);
}

// dy ⊙ relu'(pre), written into dy.
inline void relu_backward_inplace(const std::vector<double>& pre, std::vector<double>& dy) {
    for (size_t i = 0; i < dy.size(); ++i)
        if (pre[i] <= 0.0) dy[i] = 0.0;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace detail

// Everything the backward pass needs from the matching forward pass.
struct ForwardCache {
    bool valid = false;
    uint64_t params_revision = 0;
    QInput input;

    std::vector<std::vector<double>> conv_in;   // input planes per conv layer, flattened
    std::vector<std::vector<double>> conv_pre;  // pre-activation outputs per conv layer
    std::vector<double> vis_flat;               // post-relu flatten fed to vision dense
    std::vector<double> vis_pre;                // vision dense pre-activation
    std::vector<std::vector<double>> state_in;  // input per state dense layer
    std::vector<std::vector<double>> state_pre;
    std::vector<std::vector<double>> hist_x;    // one-hot inputs per step
    std::vector<std::vector<double>> hist_h;    // hidden after each step, [0] is h0
    std::vector<std::vector<double>> hist_f;    // gate activations per step
    std::vector<std::vector<double>> hist_c;    // candidate activations per step
    std::vector<double> concat;
    std::vector<std::vector<double>> fusion_in;
    std::vector<std::vector<double>> fusion_pre;
    std::vector<double> q;
};

using GradMap = std::map<std::string, Tensor>;

class QNetwork {
  public:
    explicit QNetwork(QNetworkSpec spec) : spec_(std::move(spec)) {
        auto bad = spec_.validate();
        if (!bad.empty()) throw std::invalid_argument("bad network spec: " + bad.front());
    }

    const QNetworkSpec& spec() const { return spec_; }

    // Deterministic Q-values for one input sample. Caches activations so a
    // backward pass can follow; the cache is tied to the params revision.
    Tensor forward(const Params& params, const QInput& in) {
        check_input(in);
        ForwardCache& cc = cache_;
        cc = ForwardCache{};
        cc.input = in;

        // Vision branch: conv stack with relu, flatten, dense with relu.
        std::vector<double> planes = in.vision.v;
        int c = spec_.vision_channels, h = spec_.vision_height, w = spec_.vision_width;
        for (size_t i = 0; i < spec_.conv.size(); ++i) {
            const ConvLayerSpec& cl = spec_.conv[i];
            cc.conv_in.push_back(planes);
            const Tensor& cw = tensor(params, strf("vision.conv%zu.weight", i));
            const Tensor& cb = tensor(params, strf("vision.conv%zu.bias", i));
            int oh = (h - cl.kernel) / cl.stride + 1;
            int ow = (w - cl.kernel) / cl.stride + 1;
            std::vector<double> out(size_t(cl.out_channels) * oh * ow, 0.0);
            conv_forward(planes, c, h, w, cw, cb, cl, out);
            cc.conv_pre.push_back(out);
            detail::relu_inplace(out);
            planes = std::move(out);
            c = cl.out_channels;
            h = oh;
            w = ow;
        }
        cc.vis_flat = planes;
        const Tensor& vw = tensor(params, "vision.dense.weight");
        const Tensor& vb = tensor(params, "vision.dense.bias");
        std::vector<double> vis;
        detail::dense_forward(vw, vb, cc.vis_flat, vis);
        cc.vis_pre = vis;
        detail::relu_inplace(vis);

        // State branch: dense stack with relu (pass-through when empty).
        std::vector<double> st = in.state;
        for (size_t i = 0; i < spec_.state_dense.size(); ++i) {
            cc.state_in.push_back(st);
            const Tensor& sw = tensor(params, strf("state.dense%zu.weight", i));
            const Tensor& sb = tensor(params, strf("state.dense%zu.bias", i));
            std::vector<double> out;
            detail::dense_forward(sw, sb, st, out);
            cc.state_pre.push_back(out);
            detail::relu_inplace(out);
            st = std::move(out);
        }

        // History branch: single-gate recurrent cell over one-hot actions.
        //   f = sigmoid(Wg [h, x] + bg)
        //   cand = tanh(Wc [f*h, x] + bc)
        //   h' = (1 - f) * h + f * cand
        const Tensor& gw = tensor(params, "history.gate.weight");
        const Tensor& gb = tensor(params, "history.gate.bias");
        const Tensor& cw2 = tensor(params, "history.cand.weight");
        const Tensor& cb2 = tensor(params, "history.cand.bias");
        int hid = spec_.history_hidden, na = spec_.action_count;
        std::vector<double> hh(size_t(hid), 0.0);
        cc.hist_h.push_back(hh);
        for (int t = 0; t < spec_.history_window; ++t) {
            std::vector<double> x(size_t(na), 0.0);
            int a = in.history[size_t(t)];
            if (a >= 0) x[size_t(a)] = 1.0;
            cc.hist_x.push_back(x);

            std::vector<double> gin(size_t(hid + na), 0.0);
            std::copy(hh.begin(), hh.end(), gin.begin());
            std::copy(x.begin(), x.end(), gin.begin() + hid);
            std::vector<double> f;
            detail::dense_forward(gw, gb, gin, f);
            for (double& v : f) v = detail::sigmoid(v);

            std::vector<double> cin(size_t(hid + na), 0.0);
            for (int i = 0; i < hid; ++i) cin[size_t(i)] = f[size_t(i)] * hh[size_t(i)];
            std::copy(x.begin(), x.end(), cin.begin() + hid);
            std::vector<double> cand;
            detail::dense_forward(cw2, cb2, cin, cand);
            for (double& v : cand) v = std::tanh(v);

            for (int i = 0; i < hid; ++i)
                hh[size_t(i)] = (1.0 - f[size_t(i)]) * hh[size_t(i)] +
                                f[size_t(i)] * cand[size_t(i)];
            cc.hist_f.push_back(std::move(f));
            cc.hist_c.push_back(std::move(cand));
            cc.hist_h.push_back(hh);
        }

        // Fusion head over the concatenated branch outputs.
        cc.concat.clear();
        cc.concat.insert(cc.concat.end(), vis.begin(), vis.end());
        cc.concat.insert(cc.concat.end(), st.begin(), st.end());
        cc.concat.insert(cc.concat.end(), hh.begin(), hh.end());
        std::vector<double> cur = cc.concat;
        for (size_t i = 0; i < spec_.fusion_dense.size(); ++i) {
            cc.fusion_in.push_back(cur);
            const Tensor& fw = tensor(params, strf("fusion.dense%zu.weight", i));
            const Tensor& fb = tensor(params, strf("fusion.dense%zu.bias", i));
            std::vector<double> out;
            detail::dense_forward(fw, fb, cur, out);
            cc.fusion_pre.push_back(out);
            if (i + 1 < spec_.fusion_dense.size()) detail::relu_inplace(out);
            cur = std::move(out);
        }
        cc.q = cur;

        cc.valid = true;
        cc.params_revision = params.revision;
        Tensor q = Tensor::zeros({spec_.action_count});
        q.v = cur;
        return q;
    }

    // Gradients of sum(dq . q) w.r.t. every parameter, using the activations
    // cached by the last forward(). Throws if there is no cache or the
    // parameters changed since it was filled.
    GradMap backward(const Params& params, const std::vector<double>& dq) const {
        const ForwardCache& cc = cache_;
        if (!cc.valid) throw std::logic_error("backward without a cached forward pass");
        if (cc.params_revision != params.revision)
            throw std::logic_error("stale forward cache: params changed since forward()");
        if (int(dq.size()) != spec_.action_count)
            throw std::invalid_argument(strf("output grad has %zu entries, expected %d",
                                             dq.size(), spec_.action_count));

        GradMap grads;
        for (const auto& [name, shape] : spec_.parameter_shapes())
            grads.emplace(name, Tensor::zeros(shape));

        // Fusion stack, last layer is linear.
        std::vector<double> d = dq;
        for (size_t i = spec_.fusion_dense.size(); i-- > 0;) {
            if (i + 1 < spec_.fusion_dense.size())
                detail::relu_backward_inplace(cc.fusion_pre[i], d);
            const Tensor& fw = tensor(params, strf("fusion.dense%zu.weight", i));
            std::vector<double> dx;
            detail::dense_backward(fw, cc.fusion_in[i], d, grads.at(strf("fusion.dense%zu.weight", i)),
                                   grads.at(strf("fusion.dense%zu.bias", i)), &dx);
            d = std::move(dx);
        }

        int vis_n = spec_.vision_dense;
        int st_n = spec_.state_out_size();
        int hid = spec_.history_hidden, na = spec_.action_count;
        std::vector<double> dvis(d.begin(), d.begin() + vis_n);
        std::vector<double> dst(d.begin() + vis_n, d.begin() + vis_n + st_n);
        std::vector<double> dh(d.begin() + vis_n + st_n, d.end());

        // History branch, backward through time.
        const Tensor& gw = tensor(params, "history.gate.weight");
        const Tensor& cw2 = tensor(params, "history.cand.weight");
        Tensor& dgw = grads.at("history.gate.weight");
        Tensor& dgb = grads.at("history.gate.bias");
        Tensor& dcw = grads.at("history.cand.weight");
        Tensor& dcb = grads.at("history.cand.bias");
        for (int t = spec_.history_window - 1; t >= 0; --t) {
            const std::vector<double>& hprev = cc.hist_h[size_t(t)];
            const std::vector<double>& f = cc.hist_f[size_t(t)];
            const std::vector<double>& cand = cc.hist_c[size_t(t)];
            const std::vector<double>& x = cc.hist_x[size_t(t)];

            std::vector<double> dcand(size_t(hid), 0.0), df(size_t(hid), 0.0), dhprev(size_t(hid), 0.0);
            for (int i = 0; i < hid; ++i) {
                dcand[size_t(i)] = dh[size_t(i)] * f[size_t(i)];
                df[size_t(i)] = dh[size_t(i)] * (cand[size_t(i)] - hprev[size_t(i)]);
                dhprev[size_t(i)] = dh[size_t(i)] * (1.0 - f[size_t(i)]);
            }

            // candidate: cand = tanh(Wc [f*h, x] + bc)
            std::vector<double> da(size_t(hid), 0.0);
            for (int i = 0; i < hid; ++i)
                da[size_t(i)] = dcand[size_t(i)] * (1.0 - cand[size_t(i)] * cand[size_t(i)]);
            std::vector<double> cin(size_t(hid + na), 0.0);
            for (int i = 0; i < hid; ++i) cin[size_t(i)] = f[size_t(i)] * hprev[size_t(i)];
            std::copy(x.begin(), x.end(), cin.begin() + hid);
            std::vector<double> dcin;
            detail::dense_backward(cw2, cin, da, dcw, dcb, &dcin);
            for (int i = 0; i < hid; ++i) {
                df[size_t(i)] += dcin[size_t(i)] * hprev[size_t(i)];
                dhprev[size_t(i)] += dcin[size_t(i)] * f[size_t(i)];
            }

            // gate: f = sigmoid(Wg [h, x] + bg)
            std::vector<double> dag(size_t(hid), 0.0);
            for (int i = 0; i < hid; ++i)
                dag[size_t(i)] = df[size_t(i)] * f[size_t(i)] * (1.0 - f[size_t(i)]);
            std::vector<double> gin(size_t(hid + na), 0.0);
            std::copy(hprev.begin(), hprev.end(), gin.begin());
            std::copy(x.begin(), x.end(), gin.begin() + hid);
            std::vector<double> dgin;
            detail::dense_backward(gw, gin, dag, dgw, dgb, &dgin);
            for (int i = 0; i < hid; ++i) dhprev[size_t(i)] += dgin[size_t(i)];

            dh = std::move(dhprev);
        }

        // State branch.
        for (size_t i = spec_.state_dense.size(); i-- > 0;) {
            detail::relu_backward_inplace(cc.state_pre[i], dst);
            const Tensor& sw = tensor(params, strf("state.dense%zu.weight", i));
            std::vector<double> dx;
            detail::dense_backward(sw, cc.state_in[i], dst, grads.at(strf("state.dense%zu.weight", i)),
                                   grads.at(strf("state.dense%zu.bias", i)), &dx);
            dst = std::move(dx);
        }

        // Vision branch: dense, then the conv stack in reverse.
        detail::relu_backward_inplace(cc.vis_pre, dvis);
        const Tensor& vw = tensor(params, "vision.dense.weight");
        std::vector<double> dflat;
        detail::dense_backward(vw, cc.vis_flat, dvis, grads.at("vision.dense.weight"),
                               grads.at("vision.dense.bias"), &dflat);
        int c, h, w;
        spec_.conv_output(c, h, w);
        std::vector<double> dplanes = std::move(dflat);
        for (size_t i = spec_.conv.size(); i-- > 0;) {
            const ConvLayerSpec& cl = spec_.conv[i];
            detail::relu_backward_inplace(cc.conv_pre[i], dplanes);
            int ic, ih, iw;
            conv_input_dims(i, ic, ih, iw);
            const Tensor& cwt = tensor(params, strf("vision.conv%zu.weight", i));
            std::vector<double> dx(cc.conv_in[i].size(), 0.0);
            conv_backward(cc.conv_in[i], ic, ih, iw, cwt, cl, c, h, w, dplanes,
                          grads.at(strf("vision.conv%zu.weight", i)),
                          grads.at(strf("vision.conv%zu.bias", i)), dx);
            dplanes = std::move(dx);
            c = ic;
            h = ih;
            w = iw;
        }
        return grads;
    }

    bool has_cache() const { return cache_.valid; }
    const std::vector<double>& cached_q() const { return cache_.q; }

  private:
    void check_input(const QInput& in) const {
        std::vector<int> want{spec_.vision_channels, spec_.vision_height, spec_.vision_width};
        if (in.vision.shape != want)
            throw std::invalid_argument(strf("vision input shape %s, expected %s",
                                             shape_str(in.vision.shape).c_str(),
                                             shape_str(want).c_str()));
        if (in.vision.numel() != Tensor::numel_of(want))
            throw std::invalid_argument("vision tensor values do not match its shape");
        if (int(in.state.size()) != spec_.state_size)
            throw std::invalid_argument(strf("state vector has %zu entries, expected %d",
                                             in.state.size(), spec_.state_size));
        if (int(in.history.size()) != spec_.history_window)
            throw std::invalid_argument(strf("action history has %zu entries, expected %d",
                                             in.history.size(), spec_.history_window));
        for (int a : in.history)
            if (a < -1 || a >= spec_.action_count)
                throw std::invalid_argument(strf("action history index %d out of range", a));
    }

    static const Tensor& tensor(const Params& p, const std::string& name) {
        auto it = p.tensors.find(name);
        if (it == p.tensors.end())
            throw std::invalid_argument("params missing tensor " + name);
        return it->second;
    }

    void conv_input_dims(size_t layer, int& c, int& h, int& w) const {
        c = spec_.vision_channels;
        h = spec_.vision_height;
        w = spec_.vision_width;
        for (size_t i = 0; i < layer; ++i) {
            c = spec_.conv[i].out_channels;
            h = (h - spec_.conv[i].kernel) / spec_.conv[i].stride + 1;
            w = (w - spec_.conv[i].kernel) / spec_.conv[i].stride + 1;
        }
    }

    static void conv_forward(const std::vector<double>& in, int c, int h, int w,
                             const Tensor& weight, const Tensor& bias, const ConvLayerSpec& cl,
                             std::vector<double>& out) {
        int oh = (h - cl.kernel) / cl.stride + 1;
        int ow = (w - cl.kernel) / cl.stride + 1;
        for (int oc = 0; oc < cl.out_channels; ++oc)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = bias.v[size_t(oc)];
                    for (int ic = 0; ic < c; ++ic)
                        for (int ky = 0; ky < cl.kernel; ++ky)
                            for (int kx = 0; kx < cl.kernel; ++kx) {
                                int iy = oy * cl.stride + ky;
                                int ix = ox * cl.stride + kx;
                                acc += weight.v[size_t(((oc * c + ic) * cl.kernel + ky) *
                                                       cl.kernel + kx)] *
                                       in[size_t((ic * h + iy) * w + ix)];
                            }
                    out[size_t((oc * oh + oy) * ow + ox)] = acc;
                }
    }

    static void conv_backward(const std::vector<double>& in, int c, int h, int w,
                              const Tensor& weight, const ConvLayerSpec& cl, int oc_n, int oh,
                              int ow, const std::vector<double>& dout, Tensor& dw, Tensor& db,
                              std::vector<double>& din) {
        for (int oc = 0; oc < oc_n; ++oc)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double g = dout[size_t((oc * oh + oy) * ow + ox)];
                    if (g == 0.0) continue;
                    db.v[size_t(oc)] += g;
                    for (int ic = 0; ic < c; ++ic)
                        for (int ky = 0; ky < cl.kernel; ++ky)
                            for (int kx = 0; kx < cl.kernel; ++kx) {
                                int iy = oy * cl.stride + ky;
                                int ix = ox * cl.stride + kx;
                                size_t wi = size_t(((oc * c + ic) * cl.kernel + ky) * cl.kernel +
                                                   kx);
                                size_t ii = size_t((ic * h + iy) * w + ix);
                                dw.v[wi] += g * in[ii];
                                din[ii] += g * weight.v[wi];
                            }
                }
    }

    QNetworkSpec spec_;
    mutable ForwardCache cache_;
};

struct Sgd {
    double lr = 1e-4;
};

struct Adam {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// One optimizer step. Gradients may cover any subset of the parameters;
// names or shapes that do not match are an error.
template <typename Opt>
void apply_update(Params& params, const GradMap& grads, const Opt& opt) {
    for (const auto& [name, g] : grads) {
        auto it = params.tensors.find(name);
        if (it == params.tensors.end())
            throw std::invalid_argument("gradient for unknown tensor " + name);
        if (it->second.shape != g.shape)
            throw std::invalid_argument(strf("gradient shape %s for tensor %s of shape %s",
                                             shape_str(g.shape).c_str(), name.c_str(),
                                             shape_str(it->second.shape).c_str()));
    }
    if constexpr (std::is_same_v<Opt, Sgd>) {
        for (const auto& [name, g] : grads) {
            Tensor& t = params.tensors.at(name);
            for (size_t i = 0; i < t.v.size(); ++i) t.v[i] -= opt.lr * g.v[i];
        }
    } else {
        params.adam_step += 1;
        double bc1 = 1.0 - std::pow(opt.beta1, double(params.adam_step));
        double bc2 = 1.0 - std::pow(opt.beta2, double(params.adam_step));
        for (const auto& [name, g] : grads) {
            Tensor& t = params.tensors.at(name);
            Tensor& m = params.opt_state.try_emplace("m." + name, Tensor::zeros(g.shape))
                            .first->second;
            Tensor& v = params.opt_state.try_emplace("v." + name, Tensor::zeros(g.shape))
                            .first->second;
            for (size_t i = 0; i < t.v.size(); ++i) {
                m.v[i] = opt.beta1 * m.v[i] + (1.0 - opt.beta1) * g.v[i];
                v.v[i] = opt.beta2 * v.v[i] + (1.0 - opt.beta2) * g.v[i] * g.v[i];
                double mh = m.v[i] / bc1;
                double vh = v.v[i] / bc2;
                t.v[i] -= opt.lr * mh / (std::sqrt(vh) + opt.eps);
            }
        }
    }
    params.bump();
}

// Backward through the cached forward pass, then one optimizer step.
template <typename Opt>
void backward_update(QNetwork& net, Params& params, const std::vector<double>& output_grad,
                     const Opt& opt) {
    GradMap grads = net.backward(params, output_grad);
    apply_update(params, grads, opt);
}

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst_tensor;
    int64_t worst_index = -1;
    double analytic = 0.0;
    double numeric = 0.0;
    int checked = 0;
};

// Compares a supplied analytic gradient against central finite differences
// of the scalar s = sum(w . q) whose weights come from a fixed stream. The
// relative error floors its denominator at 1e-3 so near-zero gradients are
// compared absolutely instead of dividing rounding noise.
inline GradCheckResult relative_gradient_error(const QNetworkSpec& spec, Params& params,
                                               const QInput& input, const GradMap& analytic,
                                               const std::vector<double>& out_weights, double eps,
                                               int sample_cap = 200, uint64_t sample_seed = 1) {
    if (eps <= 0) throw std::invalid_argument("gradient check eps must be positive");
    QNetwork net(spec);
    auto scalar = [&]() {
        Tensor q = net.forward(params, input);
        double s = 0;
        for (int i = 0; i < spec.action_count; ++i) s += out_weights[size_t(i)] * q.v[size_t(i)];
        return s;
    };

    std::vector<std::string> names;
    for (const auto& [name, t] : params.tensors) names.push_back(name);
    int64_t total = params.count();

    std::vector<std::pair<std::string, int64_t>> picks;
    if (total <= sample_cap) {
        for (const std::string& n : names)
            for (int64_t i = 0; i < params.tensors.at(n).numel(); ++i) picks.push_back({n, i});
    } else {
        RngStream rng(sample_seed, "neural/gradcheck");
        std::set<int64_t> seen;
        while (int(seen.size()) < sample_cap) seen.insert(int64_t(rng.next_below(uint64_t(total))));
        for (int64_t flat : seen) {
            int64_t off = flat;
            for (const std::string& n : names) {
                int64_t sz = params.tensors.at(n).numel();
                if (off < sz) {
                    picks.push_back({n, off});
                    break;
                }
                off -= sz;
            }
        }
    }

    GradCheckResult res;
    for (const auto& [name, idx] : picks) {
        double& slot = params.tensors.at(name).v[size_t(idx)];
        double keep = slot;
        slot = keep + eps;
        double up = scalar();
        slot = keep - eps;
        double down = scalar();
        slot = keep;
        double gn = (up - down) / (2.0 * eps);
        double ga = analytic.at(name).v[size_t(idx)];
        double rel = std::abs(ga - gn) / std::max({std::abs(ga), std::abs(gn), 1e-3});
        ++res.checked;
        if (rel > res.max_rel_err) {
            res.max_rel_err = rel;
            res.worst_tensor = name;
            res.worst_index = idx;
            res.analytic = ga;
            res.numeric = gn;
        }
    }
    return res;
}

// Full check: analytic gradients from the network's own backward pass.
inline GradCheckResult gradient_check(const QNetworkSpec& spec, Params& params,
                                      const QInput& input, double eps, int sample_cap = 200,
                                      uint64_t sample_seed = 1) {
    QNetwork net(spec);
    RngStream wrng(7, "neural/gradcheck/outw");
    std::vector<double> w(size_t(spec.action_count));
    for (double& x : w) x = wrng.next_double() * 2.0 - 1.0;
    net.forward(params, input);
    GradMap grads = net.backward(params, w);
    return relative_gradient_error(spec, params, input, grads, w, eps, sample_cap, sample_seed);
}

// ---- checkpoint serialization -------------------------------------------
//
// Little-endian binary: magic, format version, spec hash, then a record per
// tensor (name length, name, rank, dims, raw float64 values). Parameter
// tensors and optimizer state are separate record groups so training can
// resume exactly where it stopped.

inline constexpr char kCheckpointMagic[8] = {'G', 'S', 'N', 'E', 'T', 'C', 'K', 'P'};
inline constexpr uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<uint64_t>(v)); }

struct ByteReader {
    const std::string& buf;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > buf.size())
            throw std::runtime_error("corrupt checkpoint: file truncated");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= uint64_t(uint8_t(buf[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string bytes(size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

inline void put_tensor_record(std::string& out, const std::string& name, const Tensor& t) {
    put_u32(out, uint32_t(name.size()));
    out += name;
    put_u32(out, uint32_t(t.shape.size()));
    for (int d : t.shape) put_u32(out, uint32_t(d));
    for (double v : t.v) put_f64(out, v);
}

inline std::pair<std::string, Tensor> read_tensor_record(ByteReader& r) {
    uint32_t name_len = r.u32();
    if (name_len > 4096) throw std::runtime_error("corrupt checkpoint: unreasonable name length");
    std::string name = r.bytes(name_len);
    uint32_t rank = r.u32();
    if (rank > 8) throw std::runtime_error("corrupt checkpoint: unreasonable tensor rank");
    std::vector<int> shape;
    int64_t n = 1;
    for (uint32_t i = 0; i < rank; ++i) {
        uint32_t d = r.u32();
        if (d == 0 || d > (1u << 24))
            throw std::runtime_error("corrupt checkpoint: unreasonable dimension");
        shape.push_back(int(d));
        n *= d;
    }
    Tensor t;
    t.shape = shape;
    t.v.resize(size_t(n));
    for (int64_t i = 0; i < n; ++i) t.v[size_t(i)] = r.f64();
    return {name, t};
}

}  // namespace detail

inline void save_checkpoint(const Params& params, const std::string& path) {
    std::string out;
    out.append(kCheckpointMagic, sizeof(kCheckpointMagic));
    detail::put_u32(out, kCheckpointVersion);
    detail::put_u64(out, params.spec_hash);
    detail::put_u64(out, params.adam_step);
    detail::put_u32(out, uint32_t(params.tensors.size()));
    for (const auto& [name, t] : params.tensors) detail::put_tensor_record(out, name, t);
    detail::put_u32(out, uint32_t(params.opt_state.size()));
    for (const auto& [name, t] : params.opt_state) detail::put_tensor_record(out, name, t);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write checkpoint " + path);
    f.write(out.data(), std::streamsize(out.size()));
    if (!f) throw std::runtime_error("short write on checkpoint " + path);
}

inline Params load_checkpoint(const QNetworkSpec& spec, const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    detail::ByteReader r{buf};
    std::string magic = r.bytes(sizeof(kCheckpointMagic));
    if (std::memcmp(magic.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
        throw std::runtime_error(path + " is not a checkpoint file (bad magic)");
    uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw std::runtime_error(strf("checkpoint %s has format version %u, expected %u",
                                      path.c_str(), version, kCheckpointVersion));
    Params p;
    p.spec_hash = r.u64();
    if (p.spec_hash != spec.hash())
        throw std::runtime_error(strf(
            "checkpoint %s was written for a different network layout (spec hash %016llx, "
            "expected %016llx)",
            path.c_str(), (unsigned long long)p.spec_hash, (unsigned long long)spec.hash()));
    p.adam_step = r.u64();
    uint32_t n_params = r.u32();
    for (uint32_t i = 0; i < n_params; ++i) {
        auto [name, t] = detail::read_tensor_record(r);
        if (!t.finite())
            throw std::runtime_error("corrupt checkpoint: non-finite values in " + name);
        p.tensors.emplace(std::move(name), std::move(t));
    }
    uint32_t n_opt = r.u32();
    for (uint32_t i = 0; i < n_opt; ++i) {
        auto [name, t] = detail::read_tensor_record(r);
        p.opt_state.emplace(std::move(name), std::move(t));
    }
    if (r.pos != buf.size())
        throw std::runtime_error("corrupt checkpoint: trailing bytes after last record");

    // The stored tensors must line up with the spec exactly.
    auto want = spec.parameter_shapes();
    for (const auto& [name, shape] : want) {
        auto it = p.tensors.find(name);
        if (it == p.tensors.end())
            throw std::runtime_error("checkpoint is missing tensor " + name);
        if (it->second.shape != shape)
            throw std::runtime_error(strf("checkpoint tensor %s has shape %s, spec wants %s",
                                          name.c_str(), shape_str(it->second.shape).c_str(),
                                          shape_str(shape).c_str()));
    }
    if (p.tensors.size() != want.size())
        for (const auto& [name, t] : p.tensors) {
            bool known = false;
            for (const auto& [wname, ws] : want)
                if (wname == name) known = true;
            if (!known) throw std::runtime_error("checkpoint has unexpected tensor " + name);
        }
    for (const auto& [name, t] : p.opt_state) {
        if (name.size() < 3 || (name.rfind("m.", 0) != 0 && name.rfind("v.", 0) != 0))
            throw std::runtime_error("checkpoint has unexpected optimizer record " + name);
        auto it = p.tensors.find(name.substr(2));
        if (it == p.tensors.end() || it->second.shape != t.shape)
            throw std::runtime_error("optimizer record " + name + " does not match any tensor");
    }
    p.bump();
    return p;
}

}  // namespace gamesense
