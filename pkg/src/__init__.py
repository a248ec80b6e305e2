# AI Avatar Source Package
