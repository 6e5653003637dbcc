#include "dynrecon/experiment/io.hpp"

#include <openssl/evp.h>

#include <Eigen/Core>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

namespace dynrecon::experiment {

void write_atomic(const fs::path& path, const std::string& contents)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << contents;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string format_number(double value)
{
    char buf[32];
    for (int precision = 6; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, value);
        if (std::strtod(buf, nullptr) == value) break;
    }
    return buf;
}

std::string csv_table(const std::vector<std::string>& header, const std::vector<Vec>& columns)
{
    if (header.size() != columns.size()) throw InvalidArgument("csv header and columns differ");
    const Index rows = columns.empty() ? 0 : columns.front().size();
    for (const Vec& c : columns)
        if (c.size() != rows) throw InvalidArgument("csv columns differ in length");
    std::ostringstream out;
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
    for (Index i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < columns.size(); ++j) out << (j ? "," : "") << format_number(columns[j](i));
        out << '\n';
    }
    return out.str();
}

std::string sha256_hex(const std::string& data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < length; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

std::string sha256_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return sha256_hex(buf.str());
}

Manifest::Manifest(fs::path directory, std::string command, nlohmann::json config)
    : directory_(std::move(directory)), command_(std::move(command)), config_(std::move(config))
{
    fs::create_directories(directory_);
}

void Manifest::write(const std::string& name, const std::string& contents)
{
    write_atomic(directory_ / name, contents);
    files_.push_back({{"path", name}, {"sha256", sha256_hex(contents)}, {"bytes", contents.size()}});
}

void Manifest::finish(double wall_seconds)
{
    nlohmann::json m = {{"command", command_},
                        {"config", config_},
                        {"versions",
                         {{"dynrecon", "1.0.0"},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                        "." + std::to_string(EIGEN_MINOR_VERSION)},
                          {"compiler", __VERSION__}}},
                        {"wall_clock_seconds", wall_seconds},
                        {"files", files_}};
    write_atomic(directory_ / "manifest.json", m.dump(2) + "\n");
}

}  // namespace dynrecon::experiment
