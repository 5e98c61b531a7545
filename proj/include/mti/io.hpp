#pragma once

#include "mti/kernel.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace mti {

// Malformed configuration; the message names the line/column or the offending field.
class ConfigError : public Error {
public:
    using Error::Error;
};

struct SimulationSpec {
    Vector s0;
    Matrix covariance;
    Index paths = 100000;
    std::uint64_t seed = 0;
};

struct ModelConfig {
    DecayKernel kernel;
    TimeGrid grid;
    Vector x0;
    std::optional<SimulationSpec> simulation;
};

ModelConfig parseConfig(const std::string& text);
ModelConfig loadConfig(const std::string& path);

nlohmann::json kernelToJson(const DecayKernel& kernel);
DecayKernel kernelFromJson(const nlohmann::json& j, const std::string& field = "kernel");
nlohmann::json scalarFunctionToJson(const ScalarFunction& f);
ScalarFunction scalarFunctionFromJson(const nlohmann::json& j, const std::string& field);

nlohmann::json matrixToJson(const Matrix& m);
nlohmann::json vectorToJson(const Vector& v);

// 17 significant digits, so the text round-trips exactly.
std::string formatDouble(double v);
std::string strategyToCsv(const Strategy& s);
Strategy strategyFromCsv(const std::string& text);
Strategy loadStrategyCsv(const std::string& path);

std::string readFile(const std::string& path);
void writeFile(const std::string& path, const std::string& content);

}  // namespace mti
