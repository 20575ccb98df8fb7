#include "ecm/tree_io.hpp"

#include <fstream>
#include <stdexcept>

namespace ecm {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "ecm-scenario-tree";
constexpr int kVersion = 1;

std::vector<int> one_based(const std::vector<int>& hours)
{
    std::vector<int> out;
    for (int h : hours)
        out.push_back(h + 1);
    return out;
}

} // namespace

json schedule_to_json(const StageSchedule& s)
{
    json markets = json::array();
    for (const auto& m : s.markets)
        markets.push_back({{"id", m.id}, {"stage", m.stage}, {"periods", one_based(m.periods)}});
    return {{"hours", s.hours},
            {"total_stages", s.total_stages()},
            {"da_stage", s.da_stage},
            {"rm_stage", s.rm_stage},
            {"intraday", markets},
            {"renewable_stage", s.renewable_stage}};
}

StageSchedule schedule_from_json(const json& doc)
{
    StageSchedule s;
    s.hours = doc.at("hours").get<int>();
    s.da_stage = doc.value("da_stage", 1);
    s.rm_stage = doc.value("rm_stage", 2);
    s.renewable_stage = doc.at("renewable_stage").get<std::vector<int>>();
    for (const auto& m : doc.at("intraday")) {
        IntradayMarket mk;
        mk.id = m.at("id").get<int>();
        mk.stage = m.at("stage").get<int>();
        for (int h : m.at("periods").get<std::vector<int>>())
            mk.periods.push_back(h - 1);
        s.markets.push_back(std::move(mk));
    }
    if (doc.contains("total_stages") && doc["total_stages"].get<int>() != s.total_stages())
        throw std::invalid_argument("schedule total_stages disagrees with its renewable stages");
    return s;
}

json scenario_data_to_json(const ScenarioData& d)
{
    return {{"da_price", d.da_price},         {"rm_price", d.rm_price}, {"im_price", d.im_price},
            {"wind", d.wind},                 {"pv", d.pv},             {"ib_pos_price", d.ib_pos_price},
            {"ib_neg_price", d.ib_neg_price}};
}

ScenarioData scenario_data_from_json(const json& doc)
{
    ScenarioData d;
    d.da_price = doc.at("da_price").get<std::vector<double>>();
    d.rm_price = doc.at("rm_price").get<std::vector<double>>();
    d.im_price = doc.at("im_price").get<std::vector<std::vector<double>>>();
    d.wind = doc.at("wind").get<std::vector<double>>();
    d.pv = doc.at("pv").get<std::vector<double>>();
    d.ib_pos_price = doc.at("ib_pos_price").get<std::vector<double>>();
    d.ib_neg_price = doc.at("ib_neg_price").get<std::vector<double>>();
    return d;
}

json tree_to_json(const ScenarioTree& tree)
{
    json nodes = json::array();
    for (const auto& n : tree.nodes())
        nodes.push_back({{"id", n.id}, {"stage", n.stage}, {"parent", n.parent}, {"prob", n.cond_prob}});
    json scenarios = json::array();
    for (int w = 0; w < tree.scenario_count(); ++w)
        scenarios.push_back({{"leaf", tree.leaves()[w]},
                             {"prob", tree.probability(w)},
                             {"data", scenario_data_to_json(tree.scenario(w))}});
    return {{"format", kFormat},
            {"version", kVersion},
            {"schedule", schedule_to_json(tree.schedule())},
            {"nodes", nodes},
            {"scenarios", scenarios}};
}

ScenarioTree tree_from_json(const json& doc)
{
    if (doc.value("format", std::string(kFormat)) != kFormat)
        throw std::invalid_argument("not a scenario tree document");
    if (doc.value("version", kVersion) != kVersion)
        throw std::invalid_argument("unsupported scenario tree version");
    auto schedule = schedule_from_json(doc.at("schedule"));
    std::vector<TreeNode> nodes;
    for (const auto& n : doc.at("nodes"))
        nodes.push_back({n.at("id").get<int>(), n.at("stage").get<int>(), n.at("parent").get<int>(),
                         n.at("prob").get<double>()});
    std::vector<int> leaves;
    std::vector<double> probs;
    std::vector<ScenarioData> data;
    for (const auto& s : doc.at("scenarios")) {
        leaves.push_back(s.at("leaf").get<int>());
        probs.push_back(s.at("prob").get<double>());
        data.push_back(scenario_data_from_json(s.at("data")));
    }
    return ScenarioTree(std::move(schedule), std::move(nodes), std::move(leaves), std::move(probs),
                        std::move(data));
}

void write_json_file(const json& doc, const std::filesystem::path& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << doc.dump(1) << '\n';
    if (!out)
        throw std::runtime_error("write failed: " + path.string());
}

json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

void write_tree(const ScenarioTree& tree, const std::filesystem::path& path)
{
    write_json_file(tree_to_json(tree), path);
}

ScenarioTree read_tree(const std::filesystem::path& path)
{
    return tree_from_json(read_json_file(path));
}

} // namespace ecm
