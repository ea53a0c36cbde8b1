#include "css/emb_io.hpp"

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace css {

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                  const std::string& magic) {
    if (magic.size() != 4) throw std::invalid_argument("magic must be 4 bytes");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f.write(magic.data(), 4);
    const std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
    const std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
    f.write(reinterpret_cast<const char*>(&rows), 4);
    f.write(reinterpret_cast<const char*>(&cols), 4);
    std::vector<float> row(cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
        for (std::uint32_t c = 0; c < cols; ++c) row[c] = static_cast<float>(m(r, c));
        f.write(reinterpret_cast<const char*>(row.data()), 4 * cols);
    }
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path, const std::string& expected_magic) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    char magic[4];
    f.read(magic, 4);
    if (!f || std::string(magic, 4) != expected_magic)
        throw std::runtime_error("bad magic in " + path.string());
    std::uint32_t rows = 0, cols = 0;
    f.read(reinterpret_cast<char*>(&rows), 4);
    f.read(reinterpret_cast<char*>(&cols), 4);
    if (!f) throw std::runtime_error("truncated matrix header in " + path.string());
    Eigen::MatrixXd m(rows, cols);
    std::vector<float> row(cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
        f.read(reinterpret_cast<char*>(row.data()), 4 * cols);
        if (!f) throw std::runtime_error("truncated matrix file " + path.string());
        for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = row[c];
    }
    return m;
}

} // namespace css
