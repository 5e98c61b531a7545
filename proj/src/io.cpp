#include "mti/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mti {

using nlohmann::json;

namespace {

[[noreturn]] void fieldError(const std::string& field, const std::string& what) {
    throw ConfigError("field '" + field + "': " + what);
}

const json& require(const json& j, const char* key, const std::string& field) {
    if (!j.is_object()) fieldError(field, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) fieldError(field + "." + key, "missing");
    return *it;
}

double number(const json& j, const std::string& field) {
    if (!j.is_number()) fieldError(field, "expected a number");
    return j.get<double>();
}

double numberAt(const json& j, const char* key, const std::string& field) {
    return number(require(j, key, field), field + "." + key);
}

Matrix matrixFrom(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) fieldError(field, "expected a nonempty array of rows");
    const size_t rows = j.size();
    if (!j[0].is_array() || j[0].empty()) fieldError(field + "[0]", "expected a nonempty row array");
    const size_t cols = j[0].size();
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (size_t r = 0; r < rows; ++r) {
        const std::string rf = field + "[" + std::to_string(r) + "]";
        if (!j[r].is_array() || j[r].size() != cols) fieldError(rf, "rows must all have " + std::to_string(cols) + " entries");
        for (size_t c = 0; c < cols; ++c)
            m(static_cast<Index>(r), static_cast<Index>(c)) = number(j[r][c], rf + "[" + std::to_string(c) + "]");
    }
    return m;
}

Vector vectorFrom(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) fieldError(field, "expected a nonempty array of numbers");
    Vector v(static_cast<Index>(j.size()));
    for (size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = number(j[i], field + "[" + std::to_string(i) + "]");
    return v;
}

family::Coeffs2x2 coeffsFrom(const json& j, const std::string& field) {
    Matrix a = matrixFrom(require(j, "a", field), field + ".a");
    Matrix b = matrixFrom(require(j, "b", field), field + ".b");
    if (a.rows() != 2 || a.cols() != 2) fieldError(field + ".a", "must be 2x2");
    if (b.rows() != 2 || b.cols() != 2) fieldError(field + ".b", "must be 2x2");
    return {a(0, 0), a(0, 1), a(1, 0), a(1, 1), b(0, 0), b(0, 1), b(1, 0), b(1, 1)};
}

json coeffsTo(const family::Coeffs2x2& c) {
    return {{"a", {{c.a11, c.a12}, {c.a21, c.a22}}}, {"b", {{c.b11, c.b12}, {c.b21, c.b22}}}};
}

std::pair<int, int> lineColumn(const std::string& text, size_t byte) {
    int line = 1, col = 1;
    for (size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace

json matrixToJson(const Matrix& m) {
    json rows = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

json vectorToJson(const Vector& v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

json scalarFunctionToJson(const ScalarFunction& f) {
    json j{{"type", std::string(f.name())}};
    switch (f.tag()) {
        case ScalarFunction::Tag::ExpDecay: j["rate"] = f.p1(); break;
        case ScalarFunction::Tag::GaussianSq: break;
        case ScalarFunction::Tag::LinearPolya:
            j["lambda"] = f.p1();
            j["slope"] = f.p2();
            break;
        case ScalarFunction::Tag::Constant: j["value"] = f.p1(); break;
        case ScalarFunction::Tag::PowerCapped:
            j["exponent"] = f.p1();
            j["cap"] = f.p2();
            break;
    }
    return j;
}

ScalarFunction scalarFunctionFromJson(const json& j, const std::string& field) {
    const json& t = require(j, "type", field);
    if (!t.is_string()) fieldError(field + ".type", "expected a string");
    const std::string type = t.get<std::string>();
    try {
        if (type == "exp_decay") return ScalarFunction::expDecay(numberAt(j, "rate", field));
        if (type == "gaussian_sq") return ScalarFunction::gaussianSq();
        if (type == "linear_polya")
            return ScalarFunction::linearPolya(numberAt(j, "lambda", field), numberAt(j, "slope", field));
        if (type == "constant") return ScalarFunction::constant(numberAt(j, "value", field));
        if (type == "power_capped")
            return ScalarFunction::powerCapped(numberAt(j, "exponent", field), numberAt(j, "cap", field));
    } catch (const DomainError& e) {
        fieldError(field, e.what());
    }
    fieldError(field + ".type", "unknown scalar function '" + type + "'");
}

json kernelToJson(const DecayKernel& k) {
    using namespace family;
    json j{{"family", std::string(k.tag())}};
    const auto& var = static_cast<const KernelFamily::variant&>(k.family());
    if (auto* p = std::get_if<Permanent>(&var)) j["G0"] = matrixToJson(p->g0);
    if (auto* p = std::get_if<MatrixExp>(&var)) j["B"] = matrixToJson(p->b);
    if (auto* p = std::get_if<MatrixFunction>(&var)) {
        j["B"] = matrixToJson(p->b);
        j["function"] = scalarFunctionToJson(p->fn);
    }
    if (auto* p = std::get_if<DiagCongruence>(&var)) {
        j["O"] = matrixToJson(p->o);
        j["decays"] = json::array();
        for (const auto& d : p->decays) j["decays"].push_back(scalarFunctionToJson(d));
    }
    if (auto* p = std::get_if<Exp2x2>(&var)) j.update(coeffsTo(p->c));
    if (auto* p = std::get_if<Linear2x2>(&var)) j.update(coeffsTo(p->c));
    if (auto* p = std::get_if<CrossExp>(&var)) {
        j["kappa"] = p->kappa;
        j["kappa_tilde"] = p->kappaTilde;
        j["rho"] = p->rho;
    }
    if (auto* p = std::get_if<JordanExp>(&var)) j["b"] = p->b;
    if (auto* p = std::get_if<ScalarTimesMatrix>(&var)) {
        j["function"] = scalarFunctionToJson(p->g);
        j["L"] = matrixToJson(p->l);
        if (p->inner) j["inner"] = kernelToJson(*p->inner);
    }
    if (auto* p = std::get_if<LeftMultiply>(&var)) {
        j["L"] = matrixToJson(p->l);
        j["inner"] = kernelToJson(p->inner);
    }
    if (auto* p = std::get_if<Congruence>(&var)) {
        j["L"] = matrixToJson(p->l);
        j["inner"] = kernelToJson(p->inner);
    }
    if (auto* p = std::get_if<PlusTemporary>(&var)) {
        j["H0"] = matrixToJson(p->h0);
        j["inner"] = kernelToJson(p->inner);
    }
    return j;
}

DecayKernel kernelFromJson(const json& j, const std::string& field) {
    const json& f = require(j, "family", field);
    if (!f.is_string()) fieldError(field + ".family", "expected a string");
    const std::string fam = f.get<std::string>();
    auto mat = [&](const char* key) { return matrixFrom(require(j, key, field), field + "." + key); };
    auto inner = [&]() { return kernelFromJson(require(j, "inner", field), field + ".inner"); };
    try {
        if (fam == "permanent") return makePermanent(mat("G0"));
        if (fam == "matrix_exp") return makeMatrixExp(mat("B"));
        if (fam == "matrix_function")
            return makeMatrixFunctionKernel(mat("B"),
                                            scalarFunctionFromJson(require(j, "function", field), field + ".function"));
        if (fam == "diag_congruence") {
            const json& d = require(j, "decays", field);
            if (!d.is_array()) fieldError(field + ".decays", "expected an array");
            std::vector<ScalarFunction> decays;
            for (size_t i = 0; i < d.size(); ++i)
                decays.push_back(scalarFunctionFromJson(d[i], field + ".decays[" + std::to_string(i) + "]"));
            return makeDiagCongruence(mat("O"), std::move(decays));
        }
        if (fam == "exp2x2") return makeExp2x2(coeffsFrom(j, field));
        if (fam == "linear2x2") return makeLinear2x2(coeffsFrom(j, field));
        if (fam == "cross_exp")
            return makeCrossExp(numberAt(j, "kappa", field), numberAt(j, "kappa_tilde", field), numberAt(j, "rho", field));
        if (fam == "clamped_exp") return makeClampedExp();
        if (fam == "jordan_exp") return makeJordanExp(numberAt(j, "b", field));
        if (fam == "scalar_times_matrix") {
            ScalarFunction g = scalarFunctionFromJson(require(j, "function", field), field + ".function");
            if (j.contains("inner")) return transformKernel(TransformMode::ScalarTimesMatrix, {mat("L"), g}, inner());
            return scalarTimesMatrix(g, mat("L"));
        }
        if (fam == "left_multiply") return leftMultiply(mat("L"), inner());
        if (fam == "congruence") return congruence(mat("L"), inner());
        if (fam == "plus_temporary") return plusTemporary(mat("H0"), inner());
    } catch (const DomainError& e) {
        fieldError(field, e.what());
    }
    fieldError(field + ".family", "unknown kernel family '" + fam + "'");
}

ModelConfig parseConfig(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        auto [line, col] = lineColumn(text, e.byte);
        std::ostringstream os;
        os << "line " << line << ", column " << col << ": " << e.what();
        throw ConfigError(os.str());
    }
    if (!doc.is_object()) throw ConfigError("line 1, column 1: top level must be an object");

    DecayKernel kernel = kernelFromJson(require(doc, "kernel", "config"), "kernel");
    const Index k = kernel.dimension();

    const json& g = require(doc, "grid", "config");
    TimeGrid grid;
    try {
        if (g.contains("times")) {
            Vector t = vectorFrom(g["times"], "grid.times");
            grid = TimeGrid(std::vector<double>(t.data(), t.data() + t.size()));
        } else {
            const double horizon = numberAt(g, "horizon", "grid");
            const json& c = require(g, "count", "grid");
            if (!c.is_number_integer() || c.get<long long>() < 1) fieldError("grid.count", "expected a positive integer");
            const Index n = static_cast<Index>(c.get<long long>());
            std::string spacing = "equidistant";
            if (g.contains("spacing")) {
                if (!g["spacing"].is_string()) fieldError("grid.spacing", "expected a string");
                spacing = g["spacing"].get<std::string>();
            }
            if (spacing == "equidistant") {
                grid = TimeGrid::equidistant(horizon, n);
            } else if (spacing == "geometric") {
                const double ratio = g.contains("ratio") ? number(g["ratio"], "grid.ratio") : 1.1;
                grid = TimeGrid::geometric(horizon, n, ratio);
            } else {
                fieldError("grid.spacing", "expected 'equidistant' or 'geometric', got '" + spacing + "'");
            }
        }
    } catch (const DomainError& e) {
        fieldError("grid", e.what());
    }

    Vector x0 = vectorFrom(require(doc, "portfolio", "config"), "portfolio");
    if (x0.size() != k)
        fieldError("portfolio", "has " + std::to_string(x0.size()) + " entries, kernel dimension is " + std::to_string(k));

    ModelConfig cfg{kernel, grid, x0, std::nullopt};
    if (doc.contains("simulation")) {
        const json& s = doc["simulation"];
        SimulationSpec spec;
        spec.s0 = vectorFrom(require(s, "S0", "simulation"), "simulation.S0");
        if (spec.s0.size() != k) fieldError("simulation.S0", "dimension does not match the kernel");
        spec.covariance = matrixFrom(require(s, "covariance", "simulation"), "simulation.covariance");
        if (spec.covariance.rows() != k || spec.covariance.cols() != k)
            fieldError("simulation.covariance", "must be KxK");
        if (s.contains("paths")) {
            if (!s["paths"].is_number_integer() || s["paths"].get<long long>() < 1)
                fieldError("simulation.paths", "expected a positive integer");
            spec.paths = static_cast<Index>(s["paths"].get<long long>());
        }
        if (s.contains("seed")) {
            if (!s["seed"].is_number_unsigned() && !(s["seed"].is_number_integer() && s["seed"].get<long long>() >= 0))
                fieldError("simulation.seed", "expected a nonnegative integer");
            spec.seed = s["seed"].get<std::uint64_t>();
        }
        cfg.simulation = spec;
    }
    return cfg;
}

std::string readFile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void writeFile(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file '" + path + "'");
    out << content;
    if (!out) throw Error("failed writing '" + path + "'");
}

ModelConfig loadConfig(const std::string& path) { return parseConfig(readFile(path)); }

std::string formatDouble(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string strategyToCsv(const Strategy& s) {
    std::string out = "t";
    for (Index i = 0; i < s.dimension(); ++i) out += ",asset_" + std::to_string(i + 1);
    out += "\n";
    for (Index k = 0; k < s.size(); ++k) {
        out += formatDouble(s.grid[k]);
        for (Index i = 0; i < s.dimension(); ++i) out += "," + formatDouble(s.trades(k, i));
        out += "\n";
    }
    return out;
}

Strategy strategyFromCsv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("strategy CSV: empty input");
    auto split = [](const std::string& l) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(l);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        return cells;
    };
    std::vector<std::string> header = split(line);
    if (header.size() < 2 || header[0] != "t") throw ConfigError("strategy CSV line 1: expected header t,asset_1,...");
    const Index k = static_cast<Index>(header.size() - 1);
    for (Index i = 0; i < k; ++i)
        if (header[static_cast<size_t>(i + 1)] != "asset_" + std::to_string(i + 1))
            throw ConfigError("strategy CSV line 1: unexpected column '" + header[static_cast<size_t>(i + 1)] + "'");
    std::vector<double> times;
    std::vector<std::vector<double>> rows;
    int lineNo = 1;
    while (std::getline(in, line)) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells = split(line);
        if (static_cast<Index>(cells.size()) != k + 1)
            throw ConfigError("strategy CSV line " + std::to_string(lineNo) + ": wrong number of columns");
        std::vector<double> vals;
        for (const std::string& c : cells) {
            double v = 0;
            auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
            if (ec != std::errc() || ptr != c.data() + c.size())
                throw ConfigError("strategy CSV line " + std::to_string(lineNo) + ": bad number '" + c + "'");
            vals.push_back(v);
        }
        times.push_back(vals[0]);
        rows.emplace_back(vals.begin() + 1, vals.end());
    }
    if (rows.empty()) throw ConfigError("strategy CSV: no rows");
    TimeGrid grid;
    try {
        grid = TimeGrid(times);
    } catch (const DomainError& e) {
        throw ConfigError(std::string("strategy CSV: ") + e.what());
    }
    Strategy s{grid, Matrix(static_cast<Index>(rows.size()), k)};
    for (size_t r = 0; r < rows.size(); ++r)
        for (Index i = 0; i < k; ++i) s.trades(static_cast<Index>(r), i) = rows[r][static_cast<size_t>(i)];
    return s;
}

Strategy loadStrategyCsv(const std::string& path) { return strategyFromCsv(readFile(path)); }

}  // namespace mti
