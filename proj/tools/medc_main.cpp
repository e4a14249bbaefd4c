#include "medc/cli.hpp"

int main(int argc, char** argv) {
    return medc::run_cli(argc, argv);
}
