#include <vector>
#include <string>

#include "planlab/store/cli.h"

int main(int argc, char** argv) {
    return planlab::store::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
