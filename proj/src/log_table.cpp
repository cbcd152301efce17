#include <charconv>
#include <string>
#include <variant>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "swarmguide/scenario.hpp"

namespace swarmguide {

namespace {

constexpr std::array<char, 3> kAxes{'x', 'y', 'z'};
constexpr int kTextColumns = 3;  // shape, rate, pattern

std::vector<std::string> build_columns()
{
    std::vector<std::string> cols{"tick", "time_s"};
    for (const char* prefix : {"hand_", "hand_v"}) {
        for (char axis : kAxes) {
            cols.push_back(fmt::format("{}{}", prefix, axis));
        }
    }
    for (auto link : kAllLinks) {
        for (const char* prefix : {"dx_", "ximp_"}) {
            for (char axis : kAxes) {
                cols.push_back(fmt::format("{}{}_{}", prefix, link_name(link), axis));
            }
        }
    }
    for (std::size_t v = 1; v <= kVehicleCount; ++v) {
        for (const char* prefix : {"goal", "pos"}) {
            for (char axis : kAxes) {
                cols.push_back(fmt::format("{}{}_{}", prefix, v, axis));
            }
        }
    }
    for (const char* name : {"spread", "spread_rate", "shape", "rate", "pattern"}) {
        cols.emplace_back(name);
    }
    return cols;
}

// Flattened numeric columns between `tick` and the trailing text columns.
std::vector<double> numeric_fields(const LogRow& row)
{
    std::vector<double> out;
    out.reserve(64);
    out.push_back(row.time);
    auto push = [&](const Eigen::Vector3d& v) { out.insert(out.end(), {v.x(), v.y(), v.z()}); };
    push(row.hand_position);
    push(row.hand_velocity);
    for (std::size_t i = 0; i < kLinkCount; ++i) {
        push(row.raw_displacement[i]);
        push(row.correction[i]);
    }
    for (std::size_t i = 0; i < kVehicleCount; ++i) {
        push(row.goal[i]);
        push(row.position[i]);
    }
    out.push_back(row.spread);
    out.push_back(row.spread_rate);
    return out;
}

void assign_numeric_fields(LogRow& row, const std::vector<double>& in)
{
    std::size_t k = 0;
    row.time = in[k++];
    auto pull = [&](Eigen::Vector3d& v) {
        v = Eigen::Vector3d(in[k], in[k + 1], in[k + 2]);
        k += 3;
    };
    pull(row.hand_position);
    pull(row.hand_velocity);
    for (std::size_t i = 0; i < kLinkCount; ++i) {
        pull(row.raw_displacement[i]);
        pull(row.correction[i]);
    }
    for (std::size_t i = 0; i < kVehicleCount; ++i) {
        pull(row.goal[i]);
        pull(row.position[i]);
    }
    row.spread = in[k++];
    row.spread_rate = in[k++];
}

std::size_t numeric_count()
{
    return log_columns().size() - 1 - kTextColumns;
}

void assign_text_fields(LogRow& row, std::string_view shape, std::string_view rate,
                        std::string_view pattern, std::size_t line)
{
    const auto s = parse_shape(shape);
    const auto r = parse_rate(rate);
    const auto p = parse_pattern(pattern);
    if (!s || !r || !p) {
        throw ConfigError(fmt::format("log row {}: bad class or pattern label", line));
    }
    row.shape = *s;
    row.rate = *r;
    row.pattern = *p;
}

std::string export_csv(const LogTable& log)
{
    std::string out;
    const auto& cols = log_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        out += cols[i];
        out += i + 1 < cols.size() ? ',' : '\n';
    }
    for (const auto& row : log.rows) {
        out += fmt::format("{}", row.tick);
        for (double v : numeric_fields(row)) {
            // {} prints the shortest representation that round-trips.
            out += fmt::format(",{}", v);
        }
        out += fmt::format(",{},{},{}\n", to_string(row.shape), to_string(row.rate),
                           to_string(row.pattern));
    }
    return out;
}

std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) {
            return out;
        }
        start = pos + 1;
    }
}

template <typename T>
T parse_number(std::string_view text, std::size_t line)
{
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ConfigError(fmt::format("log line {}: bad number '{}'", line, text));
    }
    return value;
}

LogTable import_csv(std::string_view text)
{
    const auto& cols = log_columns();
    LogTable log;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        auto line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty()) {
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != cols.size()) {
            throw ConfigError(fmt::format("log line {}: expected {} fields, got {}", line_no,
                                          cols.size(), fields.size()));
        }
        if (!header_seen) {
            for (std::size_t i = 0; i < cols.size(); ++i) {
                if (fields[i] != cols[i]) {
                    throw ConfigError(fmt::format("log header column {} is '{}', expected '{}'", i,
                                                  fields[i], cols[i]));
                }
            }
            header_seen = true;
            continue;
        }
        LogRow row;
        row.tick = parse_number<std::uint64_t>(fields[0], line_no);
        std::vector<double> numbers;
        numbers.reserve(numeric_count());
        for (std::size_t i = 1; i <= numeric_count(); ++i) {
            numbers.push_back(parse_number<double>(fields[i], line_no));
        }
        assign_numeric_fields(row, numbers);
        const auto n = fields.size();
        assign_text_fields(row, fields[n - 3], fields[n - 2], fields[n - 1], line_no);
        log.rows.push_back(std::move(row));
    }
    if (!header_seen) {
        throw ConfigError("log: missing header row");
    }
    return log;
}

constexpr const char* kStructuredFormat = "swarmguide-log";

std::string export_structured(const LogTable& log)
{
    nlohmann::ordered_json doc;
    doc["format"] = kStructuredFormat;
    doc["version"] = 1;
    doc["columns"] = log_columns();
    auto rows = nlohmann::json::array();
    for (const auto& row : log.rows) {
        auto cells = nlohmann::json::array();
        cells.push_back(row.tick);
        for (double v : numeric_fields(row)) {
            cells.push_back(v);
        }
        cells.push_back(to_string(row.shape));
        cells.push_back(to_string(row.rate));
        cells.push_back(to_string(row.pattern));
        rows.push_back(std::move(cells));
    }
    doc["rows"] = std::move(rows);
    return doc.dump() + "\n";
}

LogTable import_structured(std::string_view text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(fmt::format("log: {}", e.what()));
    }
    if (!doc.is_object() || doc.value("format", "") != kStructuredFormat) {
        throw ConfigError("log: not a structured log document");
    }
    if (doc.at("columns").get<std::vector<std::string>>() != log_columns()) {
        throw ConfigError("log: column list does not match this version");
    }
    LogTable log;
    std::size_t index = 0;
    for (const auto& cells : doc.at("rows")) {
        ++index;
        if (!cells.is_array() || cells.size() != log_columns().size()) {
            throw ConfigError(fmt::format("log row {}: wrong number of cells", index));
        }
        try {
            LogRow row;
            row.tick = cells[0].get<std::uint64_t>();
            std::vector<double> numbers;
            for (std::size_t i = 1; i <= numeric_count(); ++i) {
                numbers.push_back(cells[i].get<double>());
            }
            assign_numeric_fields(row, numbers);
            const auto n = cells.size();
            assign_text_fields(row, cells[n - 3].get<std::string>(), cells[n - 2].get<std::string>(),
                               cells[n - 1].get<std::string>(), index);
            log.rows.push_back(std::move(row));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(fmt::format("log row {}: {}", index, e.what()));
        }
    }
    return log;
}

}  // namespace

const std::vector<std::string>& log_columns()
{
    static const std::vector<std::string> columns = build_columns();
    return columns;
}

std::string export_log(const LogTable& log, LogFormat format)
{
    return format == LogFormat::Csv ? export_csv(log) : export_structured(log);
}

LogTable import_log(std::string_view text, LogFormat format)
{
    return format == LogFormat::Csv ? import_csv(text) : import_structured(text);
}

}  // namespace swarmguide
