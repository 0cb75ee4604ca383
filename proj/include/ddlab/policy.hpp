#pragma once

#include "ddlab/core.hpp"
#include "ddlab/rng.hpp"
#include "ddlab/sequence.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace ddlab {

enum class PolicyMode : std::uint32_t { full5 = 0, yxx2 = 1 };

inline int n_choices(PolicyMode m) { return m == PolicyMode::full5 ? 5 : 2; }

inline PolicyMode parse_mode(const std::string& s) {
    if (s == "full5") return PolicyMode::full5;
    if (s == "yxx2") return PolicyMode::yxx2;
    throw InputError("unknown policy mode '" + s + "'");
}

inline const char* mode_name(PolicyMode m) { return m == PolicyMode::full5 ? "full5" : "yxx2"; }

struct GenomeShape {
    int input = 0, h1 = 0, h2 = 0, output = 0;
    std::size_t param_count() const {
        return std::size_t(input) * h1 + h1 + std::size_t(h1) * h2 + h2 + std::size_t(h2) * output + output;
    }
    bool operator==(const GenomeShape&) const = default;
};

inline int encoding_length(int M_max, PolicyMode mode) { return n_choices(mode) * M_max + 1; }

inline GenomeShape make_shape(int M_max, PolicyMode mode, int h1, int h2) {
    if (M_max < 1 || h1 < 1 || h2 < 1) throw InputError("genome shape dimensions must be positive");
    return {encoding_length(M_max, mode), h1, h2, n_choices(mode)};
}

// Flat layout: W1 (h1 x in, row-major), b1, W2 (h2 x h1), b2, W3 (out x h2), b3.
struct AgentGenome {
    GenomeShape shape;
    PolicyMode mode = PolicyMode::full5;
    std::vector<double> params;

    void check() const {
        if (params.size() != shape.param_count())
            throw InputError("genome parameter count " + std::to_string(params.size()) + " != shape " +
                             std::to_string(shape.param_count()));
        if (shape.output != n_choices(mode)) throw InputError("genome output size does not match mode");
    }
};

// Chosen choice indices so far: action index (full5) or sign index 0:+ 1:- (yxx2).
struct SequenceState {
    std::vector<int> choices;
    int m() const { return static_cast<int>(choices.size()); }
};

inline std::vector<double> encode_state(const SequenceState& st, int M_max, PolicyMode mode) {
    if (st.m() > M_max) throw InputError("encode_state: state longer than M_max");
    int A = n_choices(mode);
    std::vector<double> v(static_cast<std::size_t>(A) * M_max + 1, 0.0);
    for (int k = 0; k < st.m(); ++k) {
        int c = st.choices[k];
        if (c < 0 || c >= A) throw InputError("encode_state: choice index out of range");
        v[static_cast<std::size_t>(k) * A + c] = 1.0;
    }
    v.back() = static_cast<double>(st.m()) / M_max;
    return v;
}

namespace detail {

inline void relu(std::vector<double>& v) {
    for (auto& x : v) x = x > 0 ? x : 0.0;
}

inline std::vector<double> softmax(const std::vector<double>& z) {
    double mx = z[0];
    for (double x : z) mx = std::max(mx, x);
    std::vector<double> p(z.size());
    double s = 0;
    for (std::size_t i = 0; i < z.size(); ++i) s += (p[i] = std::exp(z[i] - mx));
    for (auto& x : p) x /= s;
    return p;
}

// dense layer y = W x + b, W row-major (rows x cols) starting at w
inline std::vector<double> affine(const double* w, const double* b, const std::vector<double>& x, int rows) {
    int cols = static_cast<int>(x.size());
    std::vector<double> y(b, b + rows);
    for (int r = 0; r < rows; ++r) {
        const double* row = w + std::size_t(r) * cols;
        double s = 0;
        for (int c = 0; c < cols; ++c) s += row[c] * x[c];
        y[r] += s;
    }
    return y;
}

}  // namespace detail

inline std::vector<double> forward(const AgentGenome& g, const std::vector<double>& enc) {
    g.check();
    const auto& s = g.shape;
    if (static_cast<int>(enc.size()) != s.input)
        throw InputError("forward: encoding length " + std::to_string(enc.size()) + " != input " +
                         std::to_string(s.input));
    const double* p = g.params.data();
    const double *W1 = p, *b1 = W1 + std::size_t(s.h1) * s.input, *W2 = b1 + s.h1,
                 *b2 = W2 + std::size_t(s.h2) * s.h1, *W3 = b2 + s.h2, *b3 = W3 + std::size_t(s.output) * s.h2;
    // the input is mostly zeros: accumulate only active columns of W1
    std::vector<double> h(b1, b1 + s.h1);
    for (int c = 0; c < s.input; ++c) {
        double x = enc[c];
        if (x == 0.0) continue;
        for (int r = 0; r < s.h1; ++r) h[r] += W1[std::size_t(r) * s.input + c] * x;
    }
    detail::relu(h);
    auto h2 = detail::affine(W2, b2, h, s.h2);
    detail::relu(h2);
    return detail::softmax(detail::affine(W3, b3, h2, s.output));
}

inline int sample_index(const std::vector<double>& p, Rng& rng) {
    double u = uniform01(rng), acc = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc += p[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(p.size()) - 1;
}

// Samples M choices; M_max is fixed by the genome input size.
inline std::vector<int> rollout_choices(const AgentGenome& g, int M, Rng& rng) {
    int A = n_choices(g.mode);
    int M_max = (g.shape.input - 1) / A;
    if (M < 1 || M > M_max) throw InputError("rollout: M outside [1, M_max]");
    SequenceState st;
    for (int m = 0; m < M; ++m) st.choices.push_back(sample_index(forward(g, encode_state(st, M_max, g.mode)), rng));
    return st.choices;
}

inline PulseSequence choices_to_sequence(const std::vector<int>& c, PolicyMode mode, double tau) {
    if (mode == PolicyMode::full5) {
        PulseSequence s;
        s.tau = tau;
        for (int k : c) s.actions.push_back(kAllActions.at(static_cast<std::size_t>(k)));
        return s;
    }
    std::vector<int> signs;
    for (int k : c) signs.push_back(k == 0 ? 1 : -1);
    return yxx_expand(signs, tau);
}

inline PulseSequence rollout(const AgentGenome& g, int M, Rng& rng, double tau = 5e-6) {
    return choices_to_sequence(rollout_choices(g, M, rng), g.mode, tau);
}

inline AgentGenome init_genome(const GenomeShape& shape, PolicyMode mode, Rng& rng) {
    AgentGenome g;
    g.shape = shape;
    g.mode = mode;
    g.params.resize(shape.param_count());
    std::size_t k = 0;
    auto fill = [&](std::size_t n, int fan_in) {
        double sc = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = 0; i < n; ++i) g.params[k++] = sc * gaussian(rng);
    };
    fill(std::size_t(shape.h1) * shape.input + shape.h1, shape.input);
    fill(std::size_t(shape.h2) * shape.h1 + shape.h2, shape.h1);
    fill(std::size_t(shape.output) * shape.h2 + shape.output, shape.h2);
    g.check();
    return g;
}

// ---- checkpoint file -------------------------------------------------------------------------
// little-endian:
//   char[4] "DDGN" | u32 version=1 | u32 mode | u32 input | u32 h1 | u32 h2 | u32 output
//   | u64 count | f64[count] params

inline constexpr std::uint32_t kGenomeFormatVersion = 1;

namespace detail {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

template <class T>
void put(std::string& out, T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    out.append(b, sizeof(T));
}

template <class T>
T get(const std::string& in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) throw InputError("truncated binary record");
    T v;
    std::memcpy(&v, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

}  // namespace detail

inline void append_genome(std::string& out, const AgentGenome& g) {
    out.append("DDGN", 4);
    detail::put<std::uint32_t>(out, kGenomeFormatVersion);
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(g.mode));
    for (int d : {g.shape.input, g.shape.h1, g.shape.h2, g.shape.output}) detail::put<std::uint32_t>(out, d);
    detail::put<std::uint64_t>(out, g.params.size());
    for (double v : g.params) detail::put<double>(out, v);
}

inline AgentGenome read_genome(const std::string& in, std::size_t& pos) {
    if (in.compare(pos, 4, "DDGN") != 0) throw InputError("bad genome magic");
    pos += 4;
    auto ver = detail::get<std::uint32_t>(in, pos);
    if (ver != kGenomeFormatVersion) throw InputError("unsupported genome version " + std::to_string(ver));
    AgentGenome g;
    auto mode = detail::get<std::uint32_t>(in, pos);
    if (mode > 1) throw InputError("bad genome mode");
    g.mode = static_cast<PolicyMode>(mode);
    g.shape.input = static_cast<int>(detail::get<std::uint32_t>(in, pos));
    g.shape.h1 = static_cast<int>(detail::get<std::uint32_t>(in, pos));
    g.shape.h2 = static_cast<int>(detail::get<std::uint32_t>(in, pos));
    g.shape.output = static_cast<int>(detail::get<std::uint32_t>(in, pos));
    auto n = detail::get<std::uint64_t>(in, pos);
    if (n != g.shape.param_count()) throw InputError("genome count does not match shape");
    g.params.resize(n);
    for (auto& v : g.params) v = detail::get<double>(in, pos);
    return g;
}

inline void write_binary_file(const std::string& path, const std::string& bytes) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw InputError("cannot write '" + tmp + "'");
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw InputError("write failed for '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw InputError("cannot rename to '" + path + "'");
}

inline std::string read_binary_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open '" + path + "'");
    return std::string(std::istreambuf_iterator<char>(f), {});
}

inline void save_genome(const std::string& path, const AgentGenome& g) {
    std::string b;
    append_genome(b, g);
    write_binary_file(path, b);
}

inline AgentGenome load_genome(const std::string& path) {
    std::string b = read_binary_file(path);
    std::size_t pos = 0;
    AgentGenome g = read_genome(b, pos);
    if (pos != b.size()) throw InputError("trailing bytes in genome file");
    return g;
}

}  // namespace ddlab
