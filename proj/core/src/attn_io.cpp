#include "reflow/attn_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <utility>
#include <vector>

#include "json.hpp"
#include "reflow/csv_format.hpp"

namespace reflow {

namespace {

std::string location(const std::filesystem::path& path, int line) {
    return path.string() + ":" + std::to_string(line);
}

std::vector<double> parse_csv_row(const std::string& line, int expected,
                                  const std::filesystem::path& path, int line_number) {
    std::vector<double> row;
    row.reserve(static_cast<std::size_t>(expected));
    std::size_t pos = 0;
    while (pos <= line.size()) {
        const std::size_t comma = line.find(',', pos);
        const std::string cell =
            line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        const char* begin = cell.c_str();
        char* end = nullptr;
        const double value = std::strtod(begin, &end);
        if (end == begin || *end != '\0') {
            throw Error(ErrorCode::shape_error,
                        location(path, line_number) + ": cannot parse '" + cell +
                            "' as a decimal");
        }
        row.push_back(value);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (static_cast<int>(row.size()) != expected) {
        throw Error(ErrorCode::shape_error,
                    location(path, line_number) + ": expected " + std::to_string(expected) +
                        " values, got " + std::to_string(row.size()));
    }
    return row;
}

std::string grid_csv_string(int height, int width, const std::vector<double>& values) {
    std::string out;
    for (int row = 0; row < height; ++row) {
        for (int col = 0; col < width; ++col) {
            if (col > 0) out += ',';
            out += format_full(values[static_cast<std::size_t>(row) * width + col]);
        }
        out += '\n';
    }
    return out;
}

void write_grid_csv(const std::filesystem::path& path, int height, int width,
                    const std::vector<double>& values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
    }
    out << grid_csv_string(height, width, values);
    if (!out) {
        throw Error(ErrorCode::io_error, "write failed for " + path.string());
    }
}

}  // namespace

AttentionMap read_map_csv(const std::filesystem::path& path, int height, int width) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io_error, "cannot open " + path.string());
    }
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(height) * width);

    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && line_number > height) continue;
        if (line_number > height) {
            throw Error(ErrorCode::shape_error,
                        location(path, line_number) + ": expected " + std::to_string(height) +
                            " rows");
        }
        std::vector<double> row = parse_csv_row(line, width, path, line_number);
        values.insert(values.end(), row.begin(), row.end());
    }
    if (static_cast<int>(values.size()) != height * width) {
        throw Error(ErrorCode::shape_error,
                    path.string() + ": expected " + std::to_string(height) + " rows, got " +
                        std::to_string(line_number));
    }
    try {
        return AttentionMap(height, width, std::move(values));
    } catch (const Error& e) {
        throw Error(ErrorCode::shape_error, path.string() + ": " + e.what());
    }
}

std::string map_csv_string(const AttentionMap& map) {
    return grid_csv_string(map.height(), map.width(), map.values());
}

std::string mask_csv_string(const Mask& mask) {
    return grid_csv_string(mask.height, mask.width, mask.values);
}

void write_map_csv(const std::filesystem::path& path, const AttentionMap& map) {
    write_grid_csv(path, map.height(), map.width(), map.values());
}

void write_mask_csv(const std::filesystem::path& path, const Mask& mask) {
    write_grid_csv(path, mask.height, mask.width, mask.values);
}

AttentionStack load_stack_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io_error, "cannot open " + manifest_path.string());
    }
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::io_error,
                    manifest_path.string() + ": invalid manifest JSON: " + e.what());
    }

    int height = 0;
    int width = 0;
    int count = 0;
    std::vector<std::string> files;
    try {
        height = manifest.at("height").get<int>();
        width = manifest.at("width").get<int>();
        count = manifest.at("count").get<int>();
        files = manifest.at("files").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::io_error,
                    manifest_path.string() + ": manifest missing or mistyped field: " + e.what());
    }
    if (static_cast<int>(files.size()) != count) {
        throw Error(ErrorCode::shape_error,
                    manifest_path.string() + ": count is " + std::to_string(count) +
                        " but files lists " + std::to_string(files.size()));
    }

    const std::filesystem::path base = manifest_path.parent_path();
    std::vector<AttentionMap> maps;
    maps.reserve(files.size());
    for (const std::string& file : files) {
        maps.push_back(read_map_csv(base / file, height, width));
    }
    try {
        return AttentionStack(std::move(maps));
    } catch (const Error& e) {
        throw Error(ErrorCode::shape_error, manifest_path.string() + ": " + e.what());
    }
}

std::filesystem::path write_stack_manifest(const std::filesystem::path& dir,
                                           const std::string& stem,
                                           const AttentionStack& stack) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> files;
    files.reserve(static_cast<std::size_t>(stack.size()));
    for (int i = 0; i < stack.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "%s_%02d.csv", stem.c_str(), i);
        files.emplace_back(name);
        write_map_csv(dir / name, stack.maps()[static_cast<std::size_t>(i)]);
    }

    nlohmann::json manifest;
    manifest["height"] = stack.height();
    manifest["width"] = stack.width();
    manifest["count"] = stack.size();
    manifest["files"] = files;

    const std::filesystem::path manifest_path = dir / (stem + "_manifest.json");
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::io_error,
                    "cannot open " + manifest_path.string() + " for writing");
    }
    out << manifest.dump(2) << '\n';
    if (!out) {
        throw Error(ErrorCode::io_error, "write failed for " + manifest_path.string());
    }
    return manifest_path;
}

}  // namespace reflow
