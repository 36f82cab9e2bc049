#pragma once

#include "gbo/cli/record.hpp"

#include <json.hpp>

#include <istream>
#include <limits>
#include <string>

namespace gbo::cli {

// Inverse of write_jsonl; null numbers come back as NaN.
inline ResultRecord read_jsonl(std::istream& is) {
    using nlohmann::json;
    auto number = [](const json& j) {
        return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
    };
    ResultRecord rec;
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        const std::string type = j.at("type").get<std::string>();
        if (type == "header") {
            rec.schema = j.at("schema").get<int>();
            // object keys are stored sorted, which is also the order write_jsonl uses after "experiment"
            rec.config.clear();
            const json& c = j.at("config");
            if (c.contains("experiment")) rec.config.emplace_back("experiment", c.at("experiment").get<std::string>());
            for (auto it = c.begin(); it != c.end(); ++it)
                if (it.key() != "experiment") rec.config.emplace_back(it.key(), it.value().get<std::string>());
            rec.table.x_name = j.at("x_name").get<std::string>();
            rec.table.y_name = j.at("y_name").get<std::string>();
            header = true;
        } else if (type == "metric") {
            rec.metrics.push_back(
                {j.at("name").get<std::string>(), number(j.at("value")), j.at("unit").get<std::string>()});
        } else if (type == "row") {
            rec.table.rows.push_back({j.at("series").get<std::string>(), number(j.at("x")), number(j.at("y"))});
        } else {
            throw InvalidArgument("unknown record line type '" + type + "'");
        }
    }
    require(header, "jsonl stream has no header line");
    return rec;
}

} // namespace gbo::cli
