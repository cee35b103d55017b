#include "egle/io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <variant>

namespace egle::harness {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& text, std::size_t row, std::size_t col) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw ParseError("measurement CSV: row " + std::to_string(row) + ", column " +
                         std::to_string(col + 1) + ": '" + text + "' is not a number");
    }
    return value;
}

}  // namespace

void write_measurements_csv(const std::string& path,
                            const std::vector<tlpe::PhasorRecord>& records) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    out << kMeasurementHeader << "\n" << std::setprecision(17);
    for (const auto& r : records) {
        out << r.t << ',' << r.vp.real() << ',' << r.vp.imag() << ',' << r.vq.real() << ','
            << r.vq.imag() << ',' << r.ip.real() << ',' << r.ip.imag() << ',' << r.iq.real()
            << ',' << r.iq.imag() << "\n";
    }
}

std::vector<tlpe::PhasorRecord> read_measurements_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open measurement CSV '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError("measurement CSV '" + path + "' is empty");
    if (trim(line) != kMeasurementHeader) {
        throw ParseError("measurement CSV: row 1: expected header '" +
                         std::string(kMeasurementHeader) + "'");
    }
    std::vector<tlpe::PhasorRecord> records;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(trim(field));
        if (fields.size() != 9) {
            throw ParseError("measurement CSV: row " + std::to_string(row) + ": expected 9 fields, got " +
                             std::to_string(fields.size()));
        }
        tlpe::PhasorRecord rec;
        rec.t = static_cast<int>(parse_double(fields[0], row, 0));
        rec.vp = {parse_double(fields[1], row, 1), parse_double(fields[2], row, 2)};
        rec.vq = {parse_double(fields[3], row, 3), parse_double(fields[4], row, 4)};
        rec.ip = {parse_double(fields[5], row, 5), parse_double(fields[6], row, 6)};
        rec.iq = {parse_double(fields[7], row, 7), parse_double(fields[8], row, 8)};
        records.push_back(rec);
    }
    if (records.empty()) throw ParseError("measurement CSV '" + path + "' has no data rows");
    return records;
}

namespace {

using Value = std::variant<double, bool, std::string, std::vector<double>, std::vector<std::string>>;

struct ConfigDoc {
    // section -> key -> (value, line)
    std::map<std::string, std::map<std::string, std::pair<Value, std::size_t>>> sections;
};

Value parse_value(const std::string& text, std::size_t line) {
    auto fail = [&](const std::string& why) -> ParseError {
        return ParseError("config line " + std::to_string(line) + ": " + why + ": " + text);
    };
    if (text.empty()) throw fail("empty value");
    if (text == "true") return true;
    if (text == "false") return false;
    if (text.front() == '"') {
        if (text.size() < 2 || text.back() != '"') throw fail("unterminated string");
        return text.substr(1, text.size() - 2);
    }
    if (text.front() == '[') {
        if (text.back() != ']') throw fail("unterminated array");
        std::vector<double> numbers;
        std::vector<std::string> strings;
        std::stringstream ss(text.substr(1, text.size() - 2));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            if (item.front() == '"') {
                if (item.size() < 2 || item.back() != '"') throw fail("bad string array item");
                strings.push_back(item.substr(1, item.size() - 2));
            } else {
                double v = 0.0;
                const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
                if (ec != std::errc() || ptr != item.data() + item.size()) {
                    throw fail("bad numeric array item '" + item + "'");
                }
                numbers.push_back(v);
            }
        }
        if (!strings.empty() && !numbers.empty()) throw fail("mixed array types");
        if (!strings.empty()) return strings;
        return numbers;
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) throw fail("bad value");
    return v;
}

ConfigDoc parse_config(std::istream& in) {
    ConfigDoc doc;
    std::string current;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ParseError("config line " + std::to_string(lineno) + ": unterminated section header");
            }
            current = trim(line.substr(1, line.size() - 2));
            doc.sections[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        doc.sections[current][key] = {parse_value(value, lineno), lineno};
    }
    return doc;
}

class SectionReader {
public:
    SectionReader(const ConfigDoc& doc, const std::string& name) : name_(name) {
        const auto it = doc.sections.find(name);
        if (it != doc.sections.end()) entries_ = &it->second;
    }

    template <typename T>
    void get(const std::string& key, T& out) {
        if (!entries_) return;
        const auto it = entries_->find(key);
        if (it == entries_->end()) return;
        seen_.insert(key);
        const Value& v = it->second.first;
        if constexpr (std::is_same_v<T, double>) {
            if (const double* d = std::get_if<double>(&v)) { out = *d; return; }
        } else if constexpr (std::is_same_v<T, int>) {
            if (const double* d = std::get_if<double>(&v)) { out = static_cast<int>(*d); return; }
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            if (const double* d = std::get_if<double>(&v)) { out = static_cast<std::uint64_t>(*d); return; }
        } else if constexpr (std::is_same_v<T, bool>) {
            if (const bool* b = std::get_if<bool>(&v)) { out = *b; return; }
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (const std::string* s = std::get_if<std::string>(&v)) { out = *s; return; }
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
            if (const auto* a = std::get_if<std::vector<double>>(&v)) { out = *a; return; }
        } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
            if (const auto* a = std::get_if<std::vector<std::string>>(&v)) { out = *a; return; }
        }
        throw ParseError("config line " + std::to_string(it->second.second) + ": [" + name_ + "] " +
                         key + " has the wrong type");
    }

    void finish() const {
        if (!entries_) return;
        for (const auto& [key, value] : *entries_) {
            if (!seen_.count(key)) {
                throw ParseError("config line " + std::to_string(value.second) + ": unknown key '" +
                                 key + "' in section [" + name_ + "]");
            }
        }
    }

private:
    std::string name_;
    const std::map<std::string, std::pair<Value, std::size_t>>* entries_ = nullptr;
    std::set<std::string> seen_;
};

gmm::GmmSpec read_noise_spec(const ConfigDoc& doc, const std::string& section,
                             const gmm::GmmSpec& fallback) {
    SectionReader reader(doc, section);
    std::vector<double> weights = fallback.weights;
    std::vector<double> means = fallback.means;
    std::vector<double> stddevs;
    std::vector<double> variances = fallback.variances;
    reader.get("weights", weights);
    reader.get("means", means);
    reader.get("stddevs", stddevs);
    reader.get("variances", variances);
    reader.finish();
    if (!stddevs.empty()) {
        variances.clear();
        for (double sd : stddevs) variances.push_back(sd * sd);
    }
    gmm::GmmSpec spec{weights, means, variances};
    if (spec.means.size() != spec.weights.size() || spec.variances.size() != spec.weights.size()) {
        throw ParseError("config section [" + section + "]: weights/means/stddevs lengths differ");
    }
    return spec;
}

}  // namespace

ToolConfig default_config() {
    ToolConfig cfg;
    cfg.mc.egle.m_max = 4;
    cfg.mc.egle.em.max_iter = 100;
    return cfg;
}

ToolConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file '" + path + "'");
    const ConfigDoc doc = parse_config(in);
    for (const auto& [name, unused] : doc.sections) {
        static const std::set<std::string> known = {"scenario", "noise_c", "noise_D",
                                                    "egle", "mtee", "mad", "mc"};
        if (!known.count(name)) throw ParseError("config: unknown section [" + name + "]");
    }

    ToolConfig cfg = default_config();
    auto& mc = cfg.mc;

    {
        SectionReader s(doc, "scenario");
        s.get("r", mc.scenario.true_params.r);
        s.get("x", mc.scenario.true_params.x);
        s.get("b", mc.scenario.true_params.b);
        s.get("s", mc.scenario.s);
        s.get("loading_variation", mc.scenario.loading_variation);
        s.get("base_load", mc.scenario.base_load);
        s.get("seed", mc.scenario.seed);
        s.finish();
    }
    mc.scenario.noise_c = read_noise_spec(doc, "noise_c", mc.scenario.noise_c);
    mc.scenario.noise_D = read_noise_spec(doc, "noise_D", mc.scenario.noise_D);
    {
        SectionReader s(doc, "egle");
        s.get("m_max", mc.egle.m_max);
        s.get("i_max", mc.egle.i_max);
        s.get("eps0", mc.egle.eps0);
        s.get("eps1", mc.egle.eps1);
        s.get("eps2", mc.egle.newton.tol_x);
        s.get("k_max", mc.egle.newton.k_max);
        s.get("em_max_iter", mc.egle.em.max_iter);
        s.get("em_tol", mc.egle.em.tol);
        s.get("variance_floor", mc.egle.em.variance_floor);
        s.get("em_seed", mc.egle.em.seed);
        std::string init = "quantile-split";
        s.get("em_init", init);
        if (init == "quantile-split") {
            mc.egle.em.init = gmm::EmInit::QuantileSplit;
        } else if (init == "random-seeded") {
            mc.egle.em.init = gmm::EmInit::RandomSeeded;
        } else {
            throw ParseError("config: [egle] em_init must be 'quantile-split' or 'random-seeded'");
        }
        s.get("cold_start", mc.egle.em_cold_start);
        std::vector<double> x0;
        s.get("x0", x0);
        if (!x0.empty()) {
            mc.egle.x0 = Eigen::Map<const Eigen::VectorXd>(x0.data(), static_cast<Eigen::Index>(x0.size()));
        }
        s.finish();
    }
    {
        SectionReader s(doc, "mtee");
        s.get("kernel_sigma", mc.mtee.kernel_sigma);
        s.get("step_size", mc.mtee.step_size);
        s.get("max_iter", mc.mtee.max_iter);
        s.get("tol", mc.mtee.tol);
        s.get("backtracking", mc.mtee.backtracking);
        s.finish();
    }
    {
        SectionReader s(doc, "mad");
        s.get("window", mc.mad.window);
        s.get("threshold", mc.mad.threshold);
        std::string replacement = "median";
        s.get("replacement", replacement);
        if (replacement == "median") {
            mc.mad.replacement = baselines::MadConfig::Replacement::Median;
        } else if (replacement == "interpolate") {
            mc.mad.replacement = baselines::MadConfig::Replacement::Interpolate;
        } else {
            throw ParseError("config: [mad] replacement must be 'median' or 'interpolate'");
        }
        s.finish();
    }
    {
        SectionReader s(doc, "mc");
        s.get("runs", mc.runs);
        s.get("init_jitter", mc.init_jitter);
        s.get("base_seed", mc.base_seed);
        s.get("threads", mc.threads);
        std::vector<std::string> methods;
        s.get("methods", methods);
        if (!methods.empty()) {
            mc.methods.clear();
            for (const auto& name : methods) {
                const auto method = method_from_name(name);
                if (!method) throw ParseError("config: [mc] unknown method '" + name + "'");
                mc.methods.push_back(*method);
            }
        }
        s.finish();
    }
    return cfg;
}

}  // namespace egle::harness
