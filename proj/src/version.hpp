#ifndef MSSFS_VERSION_HPP
#define MSSFS_VERSION_HPP

namespace mssfs {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mssfs

#endif  // MSSFS_VERSION_HPP
