#include "entroflow/report.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <sstream>

namespace entroflow {

namespace {

json series_block(const std::string& label, const std::vector<double>& x,
                  const std::vector<double>& y, const std::vector<double>* half = nullptr) {
    json s;
    s["label"] = label;
    s["x"] = x;
    s["y"] = y;
    if (half && !half->empty()) {
        std::vector<double> lo(y.size()), hi(y.size());
        for (size_t i = 0; i < y.size(); ++i) {
            lo[i] = y[i] - (*half)[i];
            hi[i] = y[i] + (*half)[i];
        }
        s["ylo"] = lo;
        s["yhi"] = hi;
    }
    return s;
}

}  // namespace

json to_json(const AssumptionReport& rep) {
    json j;
    j["experiment"] = "assumption-check";
    j["pass"] = rep.all_ok;
    json items = json::array();
    for (const auto& it : rep.items) {
        json e;
        e["name"] = it.name;
        e["observed"] = it.observed;
        e["allowed"] = it.allowed;
        e["ok"] = it.ok;
        items.push_back(e);
    }
    j["items"] = items;
    return j;
}

json to_json(const ContractionReport& rep) {
    json j;
    j["experiment"] = "contraction";
    j["pass"] = rep.pass;
    j["metrics"] = {{"denom_l1", rep.denom},
                    {"c_hat_lsq", rep.c_hat_lsq},
                    {"c_hat_envelope", rep.c_hat_envelope},
                    {"sup_ratio_upper_ci", rep.sup_ratio_upper},
                    {"bound_exp_cT", rep.bound},
                    {"excluded", rep.excluded},
                    {"count", rep.count},
                    {"degenerate_zero", rep.degenerate_zero}};
    if (!rep.note.empty()) j["note"] = rep.note;
    j["series"] = json::array({series_block("E|u-u~|_L1 / E|xi-xi~|_L1", rep.ratio.t,
                                            rep.ratio.mean, &rep.ratio.half_width)});
    return j;
}

json to_json(const MomentReport& rep) {
    json j;
    j["experiment"] = "moments";
    j["pass"] = rep.pass;
    j["metrics"] = {{"spread_l2", rep.spread_l2},
                    {"spread_lmp1", rep.spread_lmp1},
                    {"spread_limit", rep.spread_limit}};
    json cells = json::array();
    std::vector<double> xs, y2, ym;
    for (const auto& c : rep.cells) {
        json e;
        e["n"] = c.n;
        e["M"] = c.M;
        e["ratio_l2"] = c.ratio_l2;
        e["ratio_lmp1"] = c.ratio_lmp1;
        e["half_l2"] = c.half_l2;
        e["half_lmp1"] = c.half_lmp1;
        cells.push_back(e);
        xs.push_back(static_cast<double>(xs.size()));
        y2.push_back(c.ratio_l2);
        ym.push_back(c.ratio_lmp1);
    }
    j["cells"] = cells;
    j["series"] = json::array({series_block("moment ratio (L2 family)", xs, y2),
                               series_block("moment ratio (L_{m+1} family)", xs, ym)});
    return j;
}

json to_json(const FracRegReport& rep) {
    json j;
    j["experiment"] = "fracreg";
    j["pass"] = rep.pass;
    j["metrics"] = {{"slope", rep.slope}, {"slope_bound", rep.slope_bound}};
    j["bound_factor"] = rep.bound_factor;
    j["log_log"] = true;
    j["series"] = json::array(
        {series_block("averaged modulus vs eps", rep.epsilons, rep.lhs_mean, &rep.lhs_half)});
    return j;
}

json to_json(const PhiStabilityReport& rep) {
    json j;
    j["experiment"] = "phistab";
    j["pass"] = rep.pass;
    j["metrics"] = {{"decreasing", rep.decreasing}};
    json rows = json::array();
    std::vector<double> xs, ys;
    for (const auto& r : rep.rows) {
        json e;
        e["n"] = r.n;
        e["n_prime"] = r.n_prime;
        e["dist_l1_qt"] = r.dist_mean;
        e["half_width"] = r.dist_half;
        e["lambda"] = r.lambda;
        e["r_lambda"] = r.r_lambda;
        e["r_ok"] = r.r_ok;
        rows.push_back(e);
        xs.push_back(static_cast<double>(r.n));
        ys.push_back(r.dist_mean);
    }
    j["rows"] = rows;
    j["series"] = json::array({series_block("E|u_n - u_2n|_L1(Q_T)", xs, ys)});
    return j;
}

json to_json(const InitContReport& rep) {
    json j;
    j["experiment"] = "initcont";
    j["pass"] = rep.pass;
    j["series"] = json::array({series_block("g(h)", rep.hs, rep.g_mean, &rep.g_half)});
    return j;
}

json to_json(const CurvatureReport& rep) {
    json j;
    j["experiment"] = "mcf-consistency";
    j["metrics"] = {{"max_residual", rep.max_residual},
                    {"h", rep.h},
                    {"dt_gap", rep.dt_gap},
                    {"fitted_c", rep.fitted_c},
                    {"pairs", rep.pairs}};
    return j;
}

json to_json(const EntropyReport& rep) {
    json j;
    j["experiment"] = "entropy";
    j["pass"] = rep.pass;
    j["metrics"] = {{"det_residual", rep.det_residual},
                    {"det_tolerance", rep.det_tolerance},
                    {"calibrated_c", rep.calibrated_c},
                    {"calibrated", true},  // envelope constant is empirical, not proven
                    {"envelope_ok", rep.envelope_ok},
                    {"shrink_ok", rep.shrink_ok},
                    {"shrink_factor", rep.shrink_factor}};
    json levels = json::array();
    std::vector<double> xs, ys, half;
    for (const auto& lv : rep.levels) {
        json e;
        e["h"] = lv.h;
        e["dt"] = lv.dt;
        e["delta"] = lv.delta;
        e["mean_residual"] = lv.mean_residual;
        e["half_width"] = lv.half_width;
        e["count"] = lv.count;
        levels.push_back(e);
        xs.push_back(lv.h);
        ys.push_back(std::abs(lv.mean_residual));
        half.push_back(lv.half_width);
    }
    j["levels"] = levels;
    j["log_log"] = true;
    j["series"] = json::array({series_block("|mean residual| vs h", xs, ys, &half)});
    return j;
}

// ---------------------------------------------------------------------------
// SHA-256
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<std::uint32_t, 64> kShaK = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
    0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
    0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
    0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
    0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
    0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
    0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
    0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
    0xc67178f2};

inline std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

}  // namespace

std::string sha256_hex(std::string_view data) {
    std::array<std::uint32_t, 8> h = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                                      0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
    std::string msg(data);
    const std::uint64_t bit_len = static_cast<std::uint64_t>(msg.size()) * 8;
    msg.push_back(static_cast<char>(0x80));
    while (msg.size() % 64 != 56) msg.push_back('\0');
    for (int i = 7; i >= 0; --i) msg.push_back(static_cast<char>((bit_len >> (8 * i)) & 0xff));

    std::array<std::uint32_t, 64> w{};
    for (size_t off = 0; off < msg.size(); off += 64) {
        for (int i = 0; i < 16; ++i)
            w[i] =
                (static_cast<std::uint32_t>(static_cast<unsigned char>(msg[off + 4 * i])) << 24) |
                (static_cast<std::uint32_t>(static_cast<unsigned char>(msg[off + 4 * i + 1]))
                 << 16) |
                (static_cast<std::uint32_t>(static_cast<unsigned char>(msg[off + 4 * i + 2]))
                 << 8) |
                static_cast<std::uint32_t>(static_cast<unsigned char>(msg[off + 4 * i + 3]));
        for (int i = 16; i < 64; ++i) {
            const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3];
        std::uint32_t e = h[4], f = h[5], g = h[6], hh = h[7];
        for (int i = 0; i < 64; ++i) {
            const std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            const std::uint32_t ch = (e & f) ^ (~e & g);
            const std::uint32_t t1 = hh + s1 + ch + kShaK[i] + w[i];
            const std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            const std::uint32_t t2 = s0 + maj;
            hh = g;
            g = f;
            f = e;
            e = d + t1;
            d = c;
            c = b;
            b = a;
            a = t1 + t2;
        }
        h[0] += a;
        h[1] += b;
        h[2] += c;
        h[3] += d;
        h[4] += e;
        h[5] += f;
        h[6] += g;
        h[7] += hh;
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (std::uint32_t v : h)
        for (int i = 7; i >= 0; --i) out.push_back(hex[(v >> (4 * i)) & 0xf]);
    return out;
}

// ---------------------------------------------------------------------------
// files
// ---------------------------------------------------------------------------

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << content;
    if (!out.good()) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

void Manifest::record(const std::string& relative, const std::string& content) {
    json e;
    e["sha256"] = sha256_hex(content);
    e["bytes"] = content.size();
    entries_[relative] = e;
}

void Manifest::write_file(const std::string& relative, const std::string& content) {
    write_text_file(root_ / relative, content);
    record(relative, content);
}

void Manifest::write_report(const std::string& relative, const json& j) {
    write_file(relative, j.dump(2) + "\n");
}

void Manifest::finalize() const {
    json m;
    m["files"] = entries_;
    write_text_file(root_ / "manifest.json", m.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// trajectory export
// ---------------------------------------------------------------------------

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path,
                          double x_offset) {
    std::ostringstream os;
    os.precision(17);
    const bool two_d = !traj.snapshots.empty() && traj.snapshots.front().dim() == 2;
    os << (two_d ? "t,x,y,u\n" : "t,x,u\n");
    for (size_t s = 0; s < traj.snapshots.size(); ++s) {
        const auto& u = traj.snapshots[s];
        const double h = u.spacing();
        const int M = u.cells_per_axis();
        if (two_d) {
            for (int iy = 0; iy < M; ++iy)
                for (int ix = 0; ix < M; ++ix)
                    os << traj.times[s] << ',' << ix * h + x_offset << ',' << iy * h + x_offset
                       << ',' << u[u.index(ix, iy)] << '\n';
        } else {
            for (int ix = 0; ix < M; ++ix)
                os << traj.times[s] << ',' << ix * h + x_offset << ',' << u[ix] << '\n';
        }
    }
    write_text_file(path, os.str());
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& in, size_t& pos) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in.at(pos++))) << (8 * i);
    return v;
}

double get_f64(const std::string& in, size_t& pos) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in.at(pos++))) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

void write_trajectory_binary(const Trajectory& traj, const std::filesystem::path& path) {
    std::string out;
    const int dims = traj.snapshots.empty() ? 1 : traj.snapshots.front().dim();
    const int M = traj.snapshots.empty() ? 0 : traj.snapshots.front().cells_per_axis();
    put_u32(out, static_cast<std::uint32_t>(dims));
    put_u32(out, static_cast<std::uint32_t>(M));
    put_u32(out, static_cast<std::uint32_t>(traj.snapshots.size()));
    for (size_t s = 0; s < traj.snapshots.size(); ++s) {
        put_f64(out, traj.times[s]);
        const auto& v = traj.snapshots[s].values();
        for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(out, v[i]);
    }
    write_text_file(path, out);
}

Trajectory read_trajectory_binary(const std::filesystem::path& path) {
    const std::string in = read_text_file(path);
    size_t pos = 0;
    const int dims = static_cast<int>(get_u32(in, pos));
    const int M = static_cast<int>(get_u32(in, pos));
    const int count = static_cast<int>(get_u32(in, pos));
    Trajectory traj;
    for (int s = 0; s < count; ++s) {
        traj.times.push_back(get_f64(in, pos));
        GridFunction u(dims, M);
        for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = get_f64(in, pos);
        traj.snapshots.push_back(std::move(u));
    }
    return traj;
}

}  // namespace entroflow
