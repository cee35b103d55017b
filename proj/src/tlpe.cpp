#include "egle/tlpe.hpp"

#include <cmath>
#include <numbers>

#include "egle/rng.hpp"

namespace egle::tlpe {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::complex<double> series_admittance(const LineParameters& p) {
    const double d = p.r * p.r + p.x * p.x;
    if (d < 1e-300) throw DegenerateImpedance("line_params_to_y: r^2 + x^2 ~ 0");
    return {p.r / d, -p.x / d};
}

}  // namespace

YVector line_params_to_y(const LineParameters& p) {
    const std::complex<double> y = series_admittance(p);
    YVector out;
    out.y1 = y.real();
    out.y4 = y.imag();
    out.y3 = -out.y1;
    out.y2 = -(p.b + out.y4);
    return out;
}

LineParameters recover_line_params(const YVector& y) {
    const double dy = y.y1 - y.y3;
    const double denom = dy * dy + 4.0 * y.y4 * y.y4;
    if (denom < 1e-300) throw DegenerateAdmittance("recover_line_params: (Y1-Y3)^2 + (2Y4)^2 ~ 0");
    LineParameters p;
    p.r = 2.0 * dy / denom;
    p.x = -4.0 * y.y4 / denom;
    p.b = -(y.y2 + y.y4);
    return p;
}

std::vector<PhasorRecord> simulate_measurements(const ScenarioConfig& cfg) {
    const std::complex<double> y = series_admittance(cfg.true_params);
    const std::complex<double> jb(0.0, cfg.true_params.b);

    auto eng = make_engine(cfg.seed);
    std::uniform_real_distribution<double> vp_mag(0.98, 1.02);
    std::uniform_real_distribution<double> vp_ang(-5.0 * kDegToRad, 5.0 * kDegToRad);
    const double half_span = cfg.loading_variation / 2.0;
    std::uniform_real_distribution<double> load_mag(cfg.base_load * (1.0 - half_span),
                                                    cfg.base_load * (1.0 + half_span));
    std::uniform_real_distribution<double> load_ang(10.0 * kDegToRad, 30.0 * kDegToRad);

    std::vector<PhasorRecord> records;
    records.reserve(static_cast<std::size_t>(cfg.s));
    for (int t = 0; t < cfg.s; ++t) {
        PhasorRecord rec;
        rec.t = t;
        rec.vp = std::polar(vp_mag(eng), vp_ang(eng));
        // Inductive load current drawn out of the receiving end.
        const std::complex<double> i_load =
            std::polar(load_mag(eng), std::arg(rec.vp) - load_ang(eng));
        // Iq = jb Vq - (Vp - Vq) y with Iq = -I_load  =>  Vq = (y Vp - I_load) / (y + jb)
        rec.vq = (y * rec.vp - i_load) / (y + jb);
        rec.iq = -i_load;
        rec.ip = jb * rec.vp + (rec.vp - rec.vq) * y;
        records.push_back(rec);
    }
    return records;
}

Measurements inject_noise(const std::vector<PhasorRecord>& records, const gmm::GmmSpec& noise_c,
                          const gmm::GmmSpec& noise_D, std::uint64_t seed) {
    const std::size_t s = records.size();
    const Eigen::VectorXd dc = gmm::gmm_sample(noise_c, 4 * s, derive_seed(seed, 0));
    const Eigen::VectorXd dv = gmm::gmm_sample(noise_D, 4 * s, derive_seed(seed, 1));

    Measurements out;
    out.clean_records = records;
    out.records = records;
    for (std::size_t i = 0; i < s; ++i) {
        PhasorRecord& r = out.records[i];
        const Eigen::Index k = static_cast<Eigen::Index>(4 * i);
        r.ip += std::complex<double>(dc(k + 0), dc(k + 1));
        r.iq += std::complex<double>(dc(k + 2), dc(k + 3));
        r.vp += std::complex<double>(dv(k + 0), dv(k + 1));
        r.vq += std::complex<double>(dv(k + 2), dv(k + 3));
    }
    return out;
}

estimators::RegressionSystem build_system(const std::vector<PhasorRecord>& records) {
    const auto s = static_cast<Eigen::Index>(records.size());
    estimators::RegressionSystem sys;
    sys.D.resize(4 * s, 4);
    sys.c.resize(4 * s);
    for (Eigen::Index i = 0; i < s; ++i) {
        const PhasorRecord& r = records[static_cast<std::size_t>(i)];
        const double vpr = r.vp.real(), vpi = r.vp.imag();
        const double vqr = r.vq.real(), vqi = r.vq.imag();
        const Eigen::Index k = 4 * i;
        sys.D.row(k + 0) << vpr, vpi, vqr, vqi;
        sys.D.row(k + 1) << vpi, -vpr, vqi, -vqr;
        sys.D.row(k + 2) << vqr, vqi, vpr, vpi;
        sys.D.row(k + 3) << vqi, -vqr, vpi, -vpr;
        sys.c(k + 0) = r.ip.real();
        sys.c(k + 1) = r.ip.imag();
        sys.c(k + 2) = r.iq.real();
        sys.c(k + 3) = r.iq.imag();
    }
    return sys;
}

}  // namespace egle::tlpe
