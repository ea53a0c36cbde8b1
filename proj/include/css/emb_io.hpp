#ifndef CSS_EMB_IO_HPP
#define CSS_EMB_IO_HPP

#include <Eigen/Core>

#include <filesystem>
#include <string>

namespace css {

// Little-endian binary matrix: magic (4 bytes), u32 rows, u32 cols,
// then rows*cols float32 values in row-major order.
// "EMB1" carries embeddings, "MSK1" carries masks.
void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                  const std::string& magic = "EMB1");
Eigen::MatrixXd read_matrix(const std::filesystem::path& path,
                            const std::string& expected_magic = "EMB1");

} // namespace css

#endif
